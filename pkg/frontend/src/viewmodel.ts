/** Pure view-model reducer: the rendered state is a function of the events
 * received and nothing else. No I/O lives here. */

import type {
  ApprovalRecord,
  ConsoleEvent,
  Conversation,
  JobStatus,
  ViewModel,
} from "./types.js";

export function initialViewModel(): ViewModel {
  return {
    conversations: {},
    jobs: {},
    jobOrder: [],
    approvals: [],
    hiddenApprovals: [],
    loginRequired: false,
    streamConnected: true,
    toasts: [],
  };
}

function conversation(vm: ViewModel, id: string): Conversation {
  if (!vm.conversations[id]) {
    vm.conversations[id] = { id, messages: [], inFlight: false, pendingApprovalId: null };
  }
  return vm.conversations[id];
}

function upsertJob(vm: ViewModel, job: JobStatus): void {
  if (!vm.jobs[job.job_id]) {
    vm.jobOrder.push(job.job_id);
    vm.jobs[job.job_id] = {
      jobId: job.job_id,
      workflowId: job.workflow_id ?? "",
      state: job.state,
      retentionTimeMin: null,
      lastEventAt: job.created_at ?? 0,
    };
  }
  const row = vm.jobs[job.job_id];
  row.state = job.state;
  if (job.workflow_id) row.workflowId = job.workflow_id;
  const retention = job.result?.values?.["retention_time_min"];
  if (typeof retention === "number") row.retentionTimeMin = retention;
}

function removeApproval(vm: ViewModel, approvalId: string): void {
  vm.approvals = vm.approvals.filter((a) => a.approval_id !== approvalId);
  vm.hiddenApprovals = vm.hiddenApprovals.filter((id) => id !== approvalId);
}

/** Apply one event; returns the same (mutated) model for chaining. */
export function reduce(vm: ViewModel, event: ConsoleEvent): ViewModel {
  switch (event.kind) {
    case "job_state": {
      if (!vm.jobs[event.job_id]) {
        upsertJob(vm, { job_id: event.job_id, state: event.state });
      }
      const row = vm.jobs[event.job_id];
      row.state = event.state;
      row.lastEventAt = event.at_s;
      break;
    }
    case "job_detail":
      upsertJob(vm, event.job);
      break;
    case "job_snapshot":
      // authoritative re-list after a stream drop
      for (const job of event.jobs) upsertJob(vm, job);
      vm.streamConnected = true;
      break;
    case "approval": {
      if (event.state === "pending") {
        if (!vm.approvals.some((a) => a.approval_id === event.approval_id)) {
          vm.approvals.push({
            approval_id: event.approval_id,
            conversation_id: event.conversation_id,
            tool_name: "",
            state: "pending",
          });
        }
      } else {
        removeApproval(vm, event.approval_id);
      }
      break;
    }
    case "approval_snapshot":
      vm.approvals = event.approvals.filter((a) => a.state === "pending");
      vm.hiddenApprovals = vm.hiddenApprovals.filter((id) =>
        vm.approvals.some((a) => a.approval_id === id),
      );
      break;
    case "chat_sent": {
      const conv = conversation(vm, event.conversation_id);
      conv.messages.push({ role: "user", text: event.text });
      conv.inFlight = true;
      break;
    }
    case "chat_reply": {
      const conv = conversation(vm, event.conversation_id);
      conv.inFlight = false;
      if (event.outcome.status === "pending_approval") {
        conv.pendingApprovalId = event.outcome.approval_id;
        conv.messages.push({
          role: "notice",
          text: `Awaiting operator approval (${event.outcome.approval_id})`,
        });
      } else {
        conv.messages.push({
          role: "assistant",
          text: event.outcome.reply_text,
          agent: "supervisor",
        });
      }
      break;
    }
    case "chat_busy": {
      // a turn is already running server-side; keep the spinner, drop nothing
      conversation(vm, event.conversation_id).inFlight = true;
      break;
    }
    case "auth_required":
      vm.loginRequired = true;
      break;
    case "auth_ok":
      vm.loginRequired = false;
      break;
    case "approval_click":
      // optimistic removal; rolled back on conflict
      if (!vm.hiddenApprovals.includes(event.approval_id)) {
        vm.hiddenApprovals.push(event.approval_id);
      }
      break;
    case "approval_resolved": {
      removeApproval(vm, event.approval_id);
      const conv = conversation(vm, event.conversation_id);
      conv.pendingApprovalId = null;
      conv.inFlight = false;
      conv.messages.push({ role: "assistant", text: event.reply_text, agent: "supervisor" });
      break;
    }
    case "approval_conflict":
      vm.hiddenApprovals = vm.hiddenApprovals.filter((id) => id !== event.approval_id);
      vm.toasts.push(`Approval ${event.approval_id} was already resolved elsewhere`);
      break;
    case "stream_drop":
      vm.streamConnected = false;
      break;
    case "toast":
      vm.toasts.push(event.text);
      break;
  }
  return vm;
}

export function replay(events: ConsoleEvent[]): ViewModel {
  return events.reduce(reduce, initialViewModel());
}

/** Pending approvals as the operator sees them (optimistic removals hidden). */
export function visibleApprovals(vm: ViewModel): ApprovalRecord[] {
  return vm.approvals.filter((a) => !vm.hiddenApprovals.includes(a.approval_id));
}
