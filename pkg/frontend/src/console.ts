/** Controller: turns user intents and gateway responses into view-model
 * events. One in-flight chat per conversation, optimistic approval removal
 * with rollback, re-list on stream drop. */

import { GatewayError, type GatewayClient } from "./client.js";
import { initialViewModel, reduce } from "./viewmodel.js";
import type { ConsoleEvent, JobState, ViewModel } from "./types.js";

export class ConsoleController {
  readonly vm: ViewModel;
  private listeners: Array<(vm: ViewModel) => void> = [];

  constructor(
    private client: GatewayClient,
    private userId: string = "u1",
  ) {
    this.vm = initialViewModel();
  }

  onChange(listener: (vm: ViewModel) => void): void {
    this.listeners.push(listener);
  }

  dispatch(event: ConsoleEvent): void {
    reduce(this.vm, event);
    for (const listener of this.listeners) listener(this.vm);
  }

  /** Send a chat message; ignored while a turn is in flight (mirrors the
   * gateway's 409 rule). */
  async submitChat(conversationId: string, text: string): Promise<void> {
    const conv = this.vm.conversations[conversationId];
    if (conv?.inFlight) return;
    this.dispatch({ kind: "chat_sent", conversation_id: conversationId, text });
    try {
      const outcome = await this.client.postChat(conversationId, this.userId, text);
      this.dispatch({ kind: "chat_reply", conversation_id: conversationId, outcome });
      if (outcome.status === "pending_approval") {
        await this.refreshApprovals();
      }
    } catch (error) {
      this.handleGatewayError(error, conversationId);
    }
  }

  /** Approve or deny; the queue item disappears immediately and comes back
   * (with a toast) if someone else resolved it first. */
  async resolveApproval(approvalId: string, decision: "approve" | "deny"): Promise<void> {
    const item = this.vm.approvals.find((a) => a.approval_id === approvalId);
    this.dispatch({ kind: "approval_click", approval_id: approvalId });
    try {
      const outcome = await this.client.resolveApproval(approvalId, decision, this.userId);
      this.dispatch({
        kind: "approval_resolved",
        approval_id: approvalId,
        conversation_id: outcome.approval.conversation_id ?? item?.conversation_id ?? "",
        reply_text: outcome.turn.reply_text ?? `request ${decision}d`,
      });
    } catch (error) {
      if (error instanceof GatewayError && error.status === 409) {
        this.dispatch({ kind: "approval_conflict", approval_id: approvalId });
        await this.refreshApprovals();
        return;
      }
      this.handleGatewayError(error);
    }
  }

  /** Gateway event-stream frames land here (and recorded logs in tests). */
  handleStreamEvent(kind: string, data: Record<string, unknown>): void {
    if (kind === "job_state") {
      this.dispatch({
        kind: "job_state",
        job_id: String(data.job_id),
        state: data.state as JobState,
        at_s: Number(data.at_s ?? 0),
      });
      if (data.state === "Completed") {
        void this.fetchJobDetail(String(data.job_id));
      }
    } else if (kind === "approval") {
      this.dispatch({
        kind: "approval",
        approval_id: String(data.approval_id),
        state: data.state as "pending" | "approved" | "denied" | "expired",
        conversation_id: String(data.conversation_id ?? ""),
      });
    }
  }

  /** Stream dropped: reconnect path re-lists jobs for authoritative state. */
  async handleStreamDrop(): Promise<void> {
    this.dispatch({ kind: "stream_drop" });
    try {
      const jobs = await this.client.listJobs();
      this.dispatch({ kind: "job_snapshot", jobs });
      await this.refreshApprovals();
    } catch (error) {
      this.handleGatewayError(error);
    }
  }

  async refreshApprovals(): Promise<void> {
    try {
      const approvals = await this.client.listApprovals();
      this.dispatch({ kind: "approval_snapshot", approvals });
    } catch (error) {
      this.handleGatewayError(error);
    }
  }

  private async fetchJobDetail(jobId: string): Promise<void> {
    try {
      const job = await this.client.getJob(jobId);
      this.dispatch({ kind: "job_detail", job });
    } catch (error) {
      this.handleGatewayError(error);
    }
  }

  private handleGatewayError(error: unknown, conversationId?: string): void {
    if (error instanceof GatewayError) {
      if (error.status === 401) {
        this.dispatch({ kind: "auth_required" });
        return;
      }
      if (error.status === 409 && conversationId) {
        this.dispatch({ kind: "chat_busy", conversation_id: conversationId });
        return;
      }
      this.dispatch({ kind: "toast", text: `gateway error ${error.status}: ${error.message}` });
      if (conversationId) {
        const conv = this.vm.conversations[conversationId];
        if (conv) conv.inFlight = false;
      }
      return;
    }
    this.dispatch({ kind: "toast", text: `network error: ${String(error)}` });
  }
}
