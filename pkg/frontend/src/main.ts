/** Browser bootstrap: wires the controller to the DOM and the gateway's
 * event stream. Token lives in browser storage behind a settings field. */

import { HttpGatewayClient } from "./client.js";
import { ConsoleController } from "./console.js";
import { renderApp } from "./render.js";

const TOKEN_KEY = "tippy.api_token";
const BASE_KEY = "tippy.base_url";

function start(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const base = localStorage.getItem(BASE_KEY) ?? "";
  const token = localStorage.getItem(TOKEN_KEY) ?? "";
  const client = new HttpGatewayClient(base, token);
  const controller = new ConsoleController(client);
  const conversationId = "console";

  const redraw = () => {
    root.innerHTML = renderApp(controller.vm, conversationId);
  };
  controller.onChange(redraw);
  redraw();

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.id === "token-save") {
      const input = document.getElementById("token-input") as HTMLInputElement | null;
      if (input?.value) {
        localStorage.setItem(TOKEN_KEY, input.value);
        location.reload();
      }
      return;
    }
    const action = target.dataset.action;
    const item = target.closest("[data-approval]") as HTMLElement | null;
    if (action && item?.dataset.approval) {
      void controller.resolveApproval(item.dataset.approval, action as "approve" | "deny");
    }
  });

  const form = document.getElementById("chat-form") as HTMLFormElement | null;
  form?.addEventListener("submit", (event) => {
    event.preventDefault();
    const input = document.getElementById("chat-input") as HTMLInputElement | null;
    if (input?.value.trim()) {
      void controller.submitChat(conversationId, input.value.trim());
      input.value = "";
    }
  });

  connectStream(controller, base, token);
  void controller.handleStreamDrop(); // initial authoritative re-list
}

function connectStream(controller: ConsoleController, base: string, token: string): void {
  // EventSource cannot set Authorization headers, so the stream is consumed
  // with fetch + a line parser over the same text/event-stream framing.
  void (async () => {
    for (;;) {
      try {
        const response = await fetch(`${base}/api/events`, {
          headers: { Authorization: `Bearer ${token}` },
        });
        if (response.status === 401) {
          controller.dispatch({ kind: "auth_required" });
          return;
        }
        if (!response.body) throw new Error("no stream body");
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        let eventKind = "";
        for (;;) {
          const { value, done } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          let index;
          while ((index = buffer.indexOf("\n")) >= 0) {
            const line = buffer.slice(0, index).trim();
            buffer = buffer.slice(index + 1);
            if (line.startsWith("event:")) {
              eventKind = line.slice(6).trim();
            } else if (line.startsWith("data:") && eventKind) {
              controller.handleStreamEvent(eventKind, JSON.parse(line.slice(5)));
              eventKind = "";
            }
          }
        }
      } catch {
        // fall through to reconnect
      }
      await controller.handleStreamDrop();
      await new Promise((resolve) => setTimeout(resolve, 2000));
    }
  })();
}

document.addEventListener("DOMContentLoaded", start);
