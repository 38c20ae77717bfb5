/** Wire types for the gateway API and the console's internal events. */

export type JobState = "Created" | "Queued" | "Running" | "Completed" | "Failed" | "Cancelled";

export interface JobStatus {
  job_id: string;
  workflow_id?: string;
  state: JobState;
  created_at?: number;
  started_at?: number | null;
  ended_at?: number | null;
  result?: {
    kind: string;
    values: Record<string, number | string>;
    summary: string;
  };
}

export interface ApprovalRecord {
  approval_id: string;
  conversation_id: string;
  tool_name: string;
  state: "pending" | "approved" | "denied" | "expired";
}

export type ChatOutcome =
  | { status: "ok" | "blocked" | "error"; reply_text: string; turn_id: string }
  | { status: "pending_approval"; approval_id: string; turn_id: string };

export interface ResolveOutcome {
  approval: ApprovalRecord;
  turn: { status: string; reply_text?: string; turn_id?: string };
}

export interface ChatMessage {
  role: "user" | "assistant" | "notice";
  text: string;
  agent?: string;
}

/** Everything that can change the view model goes through one event union,
 * so replaying a recorded log reproduces the exact same model. */
export type ConsoleEvent =
  | { kind: "job_state"; job_id: string; state: JobState; at_s: number }
  | { kind: "job_detail"; job: JobStatus }
  | { kind: "job_snapshot"; jobs: JobStatus[] }
  | { kind: "approval"; approval_id: string; state: ApprovalRecord["state"]; conversation_id: string }
  | { kind: "approval_snapshot"; approvals: ApprovalRecord[] }
  | { kind: "chat_sent"; conversation_id: string; text: string }
  | { kind: "chat_reply"; conversation_id: string; outcome: ChatOutcome }
  | { kind: "chat_busy"; conversation_id: string }
  | { kind: "auth_required" }
  | { kind: "auth_ok" }
  | { kind: "approval_click"; approval_id: string }
  | { kind: "approval_resolved"; approval_id: string; conversation_id: string; reply_text: string }
  | { kind: "approval_conflict"; approval_id: string }
  | { kind: "stream_drop" }
  | { kind: "toast"; text: string };

export interface JobRow {
  jobId: string;
  workflowId: string;
  state: JobState;
  retentionTimeMin: number | null;
  lastEventAt: number;
}

export interface Conversation {
  id: string;
  messages: ChatMessage[];
  inFlight: boolean;
  pendingApprovalId: string | null;
}

export interface ViewModel {
  conversations: Record<string, Conversation>;
  jobs: Record<string, JobRow>;
  jobOrder: string[];
  approvals: ApprovalRecord[];
  hiddenApprovals: string[]; // optimistic removals awaiting confirmation
  loginRequired: boolean;
  streamConnected: boolean;
  toasts: string[];
}
