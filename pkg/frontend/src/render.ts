/** HTML-string rendering: a pure function of the view model, so replaying a
 * recorded event log yields byte-identical markup. */

import type { ViewModel } from "./types.js";
import { visibleApprovals } from "./viewmodel.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderLogin(): string {
  return `<div class="login-prompt">
  <h2>Sign in</h2>
  <p>The gateway rejected the stored token. Enter a valid API token to continue.</p>
  <input id="token-input" type="password" placeholder="API token" />
  <button id="token-save">Save token</button>
</div>`;
}

export function renderJobTable(vm: ViewModel): string {
  const rows = vm.jobOrder
    .map((id) => vm.jobs[id])
    .map((row) => {
      const retention =
        row.retentionTimeMin !== null && row.state === "Completed"
          ? row.retentionTimeMin.toFixed(3)
          : "";
      return `<tr data-job="${esc(row.jobId)}" class="state-${row.state.toLowerCase()}">` +
        `<td>${esc(row.jobId)}</td><td>${esc(row.workflowId)}</td>` +
        `<td>${row.state}</td><td>${retention}</td></tr>`;
    })
    .join("\n");
  const banner = vm.streamConnected
    ? ""
    : `<div class="stream-warning">event stream disconnected; reconnecting</div>`;
  return `${banner}<table class="jobs">
<thead><tr><th>job</th><th>workflow</th><th>state</th><th>retention (min)</th></tr></thead>
<tbody>
${rows}
</tbody>
</table>`;
}

export function renderApprovals(vm: ViewModel): string {
  const items = visibleApprovals(vm)
    .map(
      (a) =>
        `<li data-approval="${esc(a.approval_id)}">` +
        `<span>${esc(a.approval_id)} (${esc(a.conversation_id)})</span>` +
        `<button data-action="approve">Approve</button>` +
        `<button data-action="deny">Deny</button></li>`,
    )
    .join("\n");
  return `<ul class="approvals">\n${items}\n</ul>`;
}

export function renderConversation(vm: ViewModel, conversationId: string): string {
  const conv = vm.conversations[conversationId];
  if (!conv) return `<div class="chat empty"></div>`;
  const bubbles = conv.messages
    .map((m) => {
      const badge = m.agent ? `<span class="badge">${esc(m.agent)}</span>` : "";
      return `<div class="bubble ${m.role}">${badge}${esc(m.text)}</div>`;
    })
    .join("\n");
  const banner = conv.pendingApprovalId
    ? `<div class="approval-banner" data-approval="${esc(conv.pendingApprovalId)}">` +
      `Approval required — see the approvals queue</div>`
    : "";
  const spinner = conv.inFlight ? `<div class="spinner">waiting for reply</div>` : "";
  return `<div class="chat">\n${bubbles}\n${banner}${spinner}</div>`;
}

export function renderToasts(vm: ViewModel): string {
  return vm.toasts.map((t) => `<div class="toast">${esc(t)}</div>`).join("\n");
}

export function renderApp(vm: ViewModel, activeConversation: string): string {
  if (vm.loginRequired) return renderLogin();
  return [
    `<main class="console">`,
    `<section id="chat">${renderConversation(vm, activeConversation)}</section>`,
    `<section id="jobs">${renderJobTable(vm)}</section>`,
    `<section id="approvals">${renderApprovals(vm)}</section>`,
    renderToasts(vm),
    `</main>`,
  ].join("\n");
}
