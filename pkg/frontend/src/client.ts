/** Thin typed wrapper over the gateway's HTTP surface. Every write the
 * console performs goes through one of these methods. */

import type { ApprovalRecord, ChatOutcome, JobStatus, ResolveOutcome } from "./types.js";

export class GatewayError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export interface GatewayClient {
  postChat(conversationId: string, userId: string, text: string): Promise<ChatOutcome>;
  resolveApproval(approvalId: string, decision: "approve" | "deny", userId: string): Promise<ResolveOutcome>;
  listJobs(): Promise<JobStatus[]>;
  getJob(jobId: string): Promise<JobStatus>;
  listApprovals(): Promise<ApprovalRecord[]>;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class HttpGatewayClient implements GatewayClient {
  constructor(
    private baseUrl: string,
    private token: string,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      ...init,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(init.body ? { "Content-Type": "application/json" } : {}),
      },
    });
    if (!response.ok) {
      let detail = "";
      try {
        detail = ((await response.json()) as { error?: string }).error ?? "";
      } catch {
        // non-JSON error body; status code is enough
      }
      throw new GatewayError(response.status, detail || `HTTP ${response.status}`);
    }
    return (await response.json()) as T;
  }

  postChat(conversationId: string, userId: string, text: string): Promise<ChatOutcome> {
    return this.request<ChatOutcome>("/api/chat", {
      method: "POST",
      body: JSON.stringify({ conversation_id: conversationId, user_id: userId, text }),
    });
  }

  resolveApproval(
    approvalId: string,
    decision: "approve" | "deny",
    userId: string,
  ): Promise<ResolveOutcome> {
    return this.request<ResolveOutcome>(`/api/approvals/${approvalId}`, {
      method: "POST",
      body: JSON.stringify({ decision, user_id: userId }),
    });
  }

  async listJobs(): Promise<JobStatus[]> {
    const payload = await this.request<{ jobs: JobStatus[] }>("/api/jobs");
    return payload.jobs;
  }

  getJob(jobId: string): Promise<JobStatus> {
    return this.request<JobStatus>(`/api/jobs/${jobId}`);
  }

  async listApprovals(): Promise<ApprovalRecord[]> {
    const payload = await this.request<{ approvals: ApprovalRecord[] }>(
      "/api/approvals?state=pending",
    );
    return payload.approvals;
  }
}
