/**
 * Browser entry point: subscribe to a run's event stream, fold records
 * into board state, re-render on change, and send operator actions back.
 *
 * Query params: ?run=<run_id> picks the run, ?base=<url> overrides the
 * gateway origin (defaults to the page's own origin).
 */

import { GatewayClient } from "./client.js";
import { parseEvent } from "./schemas.js";
import { fold, initialState, type DashboardState } from "./state.js";
import { renderDashboard } from "./render.js";

function wire(): void {
  const params = new URLSearchParams(window.location.search);
  const runId = params.get("run");
  const base = params.get("base") ?? window.location.origin;
  const root = document.getElementById("app");
  if (!root) return;
  if (!runId) {
    root.innerHTML =
      `<p class="hint">No run selected. Open with <code>?run=&lt;run_id&gt;</code> ` +
      `(and optional <code>&amp;base=http://host:port</code>).</p>`;
    return;
  }

  const client = new GatewayClient(base);
  let state: DashboardState = initialState();

  const paint = (): void => {
    root.innerHTML = renderDashboard(state);
  };

  const apply = (raw: unknown): void => {
    let record;
    try {
      record = parseEvent(raw);
    } catch (err) {
      console.warn("dropped malformed record", err);
      return;
    }
    const next = fold(state, record);
    if (next !== state) {
      state = next;
      paint();
    }
  };

  root.addEventListener("click", (evt) => {
    const el = evt.target;
    if (!(el instanceof HTMLButtonElement)) return;
    const decision = el.dataset.decision;
    const approvalId = el.dataset.approval;
    if (decision && approvalId) {
      client
        .command(runId, decision === "approved" ? "approve" : "reject", {
          approval_id: approvalId,
          operator: "dashboard",
        })
        .catch((err) => console.error("decision failed", err));
      return;
    }
    const command = el.dataset.command;
    if (command) {
      client.command(runId, command).catch((err) => console.error(`${command} failed`, err));
    }
  });

  paint();
  const source = new EventSource(client.eventStreamUrl(runId, 0));
  source.onmessage = (msg) => {
    try {
      apply(JSON.parse(msg.data));
    } catch (err) {
      console.warn("dropped unparseable frame", err);
    }
  };
  source.onerror = () => {
    // EventSource reconnects on its own; the seq dedupe in fold absorbs replays
  };
}

// importable from tests without side effects; only a real page boots it
if (typeof window !== "undefined" && typeof document !== "undefined") {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", wire);
  } else {
    wire();
  }
}

export { wire };
