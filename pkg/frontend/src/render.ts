/** State to HTML. Pure string building; main.ts owns the DOM and wiring. */

import {
  activeDisruptions,
  approvalQueue,
  summary,
  tripBoard,
  type ApprovalTicket,
  type DashboardState,
  type DisruptionCard,
  type TripCard,
} from "./state.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const esc = escapeHtml;

function tripRow(t: TripCard): string {
  const modes = t.modes.length ? t.modes.join(" + ") : "-";
  const where = t.atNode ?? "-";
  const leg = t.currentLeg ?? "-";
  const done = t.completedAt === null ? "-" : String(t.completedAt);
  return (
    `<tr class="trip trip-${esc(t.status)}" data-request="${esc(t.requestId)}">` +
    `<td>${esc(t.label)}</td>` +
    `<td>${esc(t.passenger || "-")}</td>` +
    `<td><span class="badge badge-${esc(t.status)}">${esc(t.status)}</span></td>` +
    `<td>${esc(t.planId ?? "-")}</td>` +
    `<td>r${t.revision}</td>` +
    `<td>${esc(modes)}</td>` +
    `<td>${esc(where)}</td>` +
    `<td>${esc(leg)}</td>` +
    `<td>${done}</td>` +
    `</tr>`
  );
}

function approvalRow(a: ApprovalTicket): string {
  const urgency = a.overdue ? "overdue" : a.countdown <= 5 ? "urgent" : "calm";
  return (
    `<tr class="approval approval-${urgency}" data-approval="${esc(a.approvalId)}">` +
    `<td>${esc(a.approvalId)}</td>` +
    `<td>${esc(a.requestId)}</td>` +
    `<td>${esc(a.planId)} r${a.revision}</td>` +
    `<td>${esc(a.riskClass)}</td>` +
    `<td>${a.countdown}${a.overdue ? " (overdue)" : ""}</td>` +
    `<td>` +
    `<button class="act" data-decision="approved" data-approval="${esc(a.approvalId)}">approve</button> ` +
    `<button class="act" data-decision="rejected" data-approval="${esc(a.approvalId)}">reject</button>` +
    `</td>` +
    `</tr>`
  );
}

function disruptionRow(d: DisruptionCard): string {
  const expiry = d.expiry === null ? "open-ended" : `until ${d.expiry}`;
  return (
    `<li class="disruption">` +
    `${esc(d.kind)} on ${esc(d.target.join(", ") || "?")} (from ${d.activation}, ${esc(expiry)})` +
    `</li>`
  );
}

export function renderDashboard(state: DashboardState): string {
  const sum = summary(state);
  const trips = tripBoard(state);
  const approvals = approvalQueue(state);
  const disruptions = activeDisruptions(state);
  const run = state.run;

  const header =
    `<header class="top">` +
    `<h1>${esc(run.runId ?? "no run")}</h1>` +
    `<div class="meta">` +
    `scenario ${esc(run.scenario ?? "-")} · seed ${run.seed ?? "-"} · strategy ${esc(run.strategy ?? "-")}` +
    `</div>` +
    `<div class="clock">tick <strong>${sum.tick}</strong> · ${esc(sum.runStatus)}</div>` +
    `</header>`;

  const counters =
    `<section class="counters">` +
    `<span>trips ${sum.totalTrips}</span>` +
    `<span>done ${sum.completed}</span>` +
    `<span>aborted ${sum.aborted}</span>` +
    `<span>active ${sum.active}</span>` +
    `<span>waiting ${sum.waiting}</span>` +
    `<span>messages ${sum.messages}</span>` +
    `</section>`;

  const controls =
    `<section class="controls">` +
    `<button class="ctl" data-command="pause">pause</button>` +
    `<button class="ctl" data-command="step">step</button>` +
    `<button class="ctl" data-command="resume">resume</button>` +
    `</section>`;

  const approvalBlock = approvals.length
    ? `<section class="approvals"><h2>Pending approvals (${approvals.length})</h2>` +
      `<table><thead><tr><th>id</th><th>trip</th><th>plan</th><th>risk</th><th>ticks left</th><th></th></tr></thead>` +
      `<tbody>${approvals.map(approvalRow).join("")}</tbody></table></section>`
    : `<section class="approvals empty"><h2>Pending approvals (0)</h2><p>none waiting</p></section>`;

  const tripBlock =
    `<section class="trips"><h2>Trips (${trips.length})</h2>` +
    `<table><thead><tr>` +
    `<th>label</th><th>passenger</th><th>status</th><th>plan</th><th>rev</th>` +
    `<th>modes</th><th>at</th><th>leg</th><th>done at</th>` +
    `</tr></thead>` +
    `<tbody>${trips.map(tripRow).join("")}</tbody></table></section>`;

  const disruptionBlock = disruptions.length
    ? `<section class="disruptions"><h2>Active disruptions (${disruptions.length})</h2>` +
      `<ul>${disruptions.map(disruptionRow).join("")}</ul></section>`
    : "";

  return header + counters + controls + approvalBlock + tripBlock + disruptionBlock;
}
