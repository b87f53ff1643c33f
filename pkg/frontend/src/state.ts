/**
 * Pure event fold: log records in, board state out.
 *
 * The fold never mutates its input. Replaying the same log from
 * initialState() always lands on the same board, so the dashboard can
 * reconnect mid-run and catch up from any cursor.
 */

import type { EventRecord } from "./schemas.js";

export type TripStatus =
  | "requested"
  | "planning"
  | "awaiting_approval"
  | "active"
  | "completed"
  | "aborted";

export interface TripCard {
  requestId: string;
  passenger: string;
  label: string;
  requestedAt: number | null;
  status: TripStatus;
  planId: string | null;
  revision: number;
  modes: string[];
  atNode: string | null;
  currentLeg: string | null;
  pendingApproval: string | null;
  completedAt: number | null;
  abortReason: string | null;
}

export interface ApprovalCard {
  approvalId: string;
  requestId: string;
  planId: string;
  revision: number;
  riskClass: string;
  submittedAt: number;
  timeoutAt: number;
  decision: string | null;
  decidedBy: string | null;
}

export type DisruptionPhase = "scheduled" | "active" | "expired";

export interface DisruptionCard {
  id: string;
  kind: string;
  target: string[];
  activation: number;
  expiry: number | null;
  phase: DisruptionPhase;
}

export interface RunInfo {
  runId: string | null;
  scenario: string | null;
  seed: number | null;
  strategy: string | null;
  status: "unknown" | "running" | "finished";
}

export interface Counters {
  events: number;
  messages: number;
  conversations: number;
  allocations: number;
  fallbacks: number;
}

export interface DashboardState {
  run: RunInfo;
  tick: number;
  lastSeq: number;
  trips: Record<string, TripCard>;
  approvals: Record<string, ApprovalCard>;
  disruptions: Record<string, DisruptionCard>;
  counters: Counters;
}

export function initialState(): DashboardState {
  return {
    run: { runId: null, scenario: null, seed: null, strategy: null, status: "unknown" },
    tick: 0,
    lastSeq: -1,
    trips: {},
    approvals: {},
    disruptions: {},
    counters: { events: 0, messages: 0, conversations: 0, allocations: 0, fallbacks: 0 },
  };
}

function freshTrip(requestId: string): TripCard {
  return {
    requestId,
    passenger: "",
    label: requestId,
    requestedAt: null,
    status: "requested",
    planId: null,
    revision: 0,
    modes: [],
    atNode: null,
    currentLeg: null,
    pendingApproval: null,
    completedAt: null,
    abortReason: null,
  };
}

function str(v: unknown): string | null {
  return typeof v === "string" ? v : null;
}

function num(v: unknown): number | null {
  return typeof v === "number" && Number.isFinite(v) ? v : null;
}

function planModes(plan: unknown): string[] {
  if (typeof plan !== "object" || plan === null) return [];
  const legs = (plan as Record<string, unknown>).legs;
  if (!Array.isArray(legs)) return [];
  const modes: string[] = [];
  for (const leg of legs) {
    if (typeof leg === "object" && leg !== null) {
      const mode = (leg as Record<string, unknown>).mode;
      if (typeof mode === "string") modes.push(mode);
    }
  }
  return modes;
}

function firstLegOrigin(plan: unknown): string | null {
  if (typeof plan !== "object" || plan === null) return null;
  const legs = (plan as Record<string, unknown>).legs;
  if (!Array.isArray(legs) || legs.length === 0) return null;
  const first = legs[0];
  if (typeof first !== "object" || first === null) return null;
  return str((first as Record<string, unknown>).origin);
}

/** Apply one log record. Stale or replayed records (seq not advancing) are ignored. */
export function fold(state: DashboardState, ev: EventRecord): DashboardState {
  if (ev.seq <= state.lastSeq) return state;

  const next: DashboardState = {
    ...state,
    run: { ...state.run },
    trips: { ...state.trips },
    approvals: { ...state.approvals },
    disruptions: { ...state.disruptions },
    counters: { ...state.counters },
  };
  next.lastSeq = ev.seq;
  next.tick = Math.max(state.tick, ev.tick);
  next.counters.events += 1;

  const p = ev.payload;
  const touch = (requestId: string, changes: Partial<TripCard>): void => {
    const card = next.trips[requestId] ?? freshTrip(requestId);
    next.trips[requestId] = { ...card, ...changes };
  };

  switch (ev.kind) {
    case "run_started": {
      next.run = {
        runId: str(p.run_id),
        scenario: str(p.scenario),
        seed: num(p.seed),
        strategy: str(p.strategy),
        status: "running",
      };
      break;
    }
    case "run_finished": {
      next.run.status = "finished";
      break;
    }
    case "passenger_utterance": {
      const rid = str(p.request_id);
      if (rid) {
        // provisional intake stamp; the plan_trip hop one tick later is authoritative
        touch(rid, { passenger: str(p.passenger) ?? "", requestedAt: ev.tick, status: "requested" });
      }
      break;
    }
    case "message": {
      next.counters.messages += 1;
      const inner = p.payload;
      if (p.kind === "request" && typeof inner === "object" && inner !== null) {
        const body = inner as Record<string, unknown>;
        const rid = str(body.request_id);
        if (body.action === "plan_trip" && rid) {
          touch(rid, { passenger: str(p.sender) ?? "", requestedAt: ev.tick });
        }
      }
      break;
    }
    case "task_spec": {
      const rid = str(p.request_id);
      if (rid) {
        const spec = (p.spec ?? {}) as Record<string, unknown>;
        const card = next.trips[rid] ?? freshTrip(rid);
        touch(rid, {
          label: str(spec.trip_label) ?? card.label,
          status: card.status === "requested" ? "planning" : card.status,
        });
      }
      break;
    }
    case "plan_proposed": {
      const rid = str(p.request_id);
      if (rid) {
        const card = next.trips[rid] ?? freshTrip(rid);
        touch(rid, {
          planId: str(p.plan_id),
          revision: num(p.revision) ?? card.revision,
          modes: planModes(p.plan),
          status: card.status === "active" ? "active" : "planning",
        });
      }
      break;
    }
    case "approval_pending": {
      const aid = str(p.approval_id);
      const rid = str(p.request_id);
      if (aid && rid) {
        next.approvals[aid] = {
          approvalId: aid,
          requestId: rid,
          planId: str(p.plan_id) ?? "",
          revision: num(p.revision) ?? 0,
          riskClass: str(p.risk_class) ?? "",
          submittedAt: num(p.submitted_at) ?? ev.tick,
          timeoutAt: num(p.timeout_at) ?? ev.tick,
          decision: str(p.decision),
          decidedBy: str(p.decided_by),
        };
        const card = next.trips[rid] ?? freshTrip(rid);
        touch(rid, {
          pendingApproval: aid,
          status: card.status === "active" ? "active" : "awaiting_approval",
        });
      }
      break;
    }
    case "approval_decided": {
      const aid = str(p.approval_id);
      if (aid) {
        const appr = next.approvals[aid];
        if (appr) {
          next.approvals[aid] = {
            ...appr,
            decision: str(p.decision),
            decidedBy: str(p.decided_by),
          };
          const card = next.trips[appr.requestId];
          if (card && card.pendingApproval === aid) {
            touch(appr.requestId, { pendingApproval: null });
          }
        }
      }
      break;
    }
    case "gate_outcome": {
      if (p.outcome === "fallback_activated") next.counters.fallbacks += 1;
      const rid = str(p.request_id);
      if (rid && p.outcome === "rejected") {
        const card = next.trips[rid];
        if (card && card.status !== "active") touch(rid, { status: "planning" });
      }
      break;
    }
    case "plan_activated": {
      const rid = str(p.request_id);
      if (rid) {
        const card = next.trips[rid] ?? freshTrip(rid);
        touch(rid, {
          status: "active",
          planId: str(p.plan_id),
          revision: num(p.revision) ?? card.revision,
          modes: planModes(p.plan),
          atNode: card.atNode ?? firstLegOrigin(p.plan),
          currentLeg: null,
        });
      }
      break;
    }
    case "status": {
      const rid = str(p.request_id);
      if (rid) {
        const card = next.trips[rid] ?? freshTrip(rid);
        const at = str(p.at_node) ?? card.atNode;
        const legId = str(p.leg_id);
        if (p.event === "leg_started") {
          touch(rid, { atNode: at, currentLeg: legId });
        } else if (p.event === "leg_completed") {
          touch(rid, { atNode: at, currentLeg: null });
        } else {
          touch(rid, { atNode: at });
        }
      }
      break;
    }
    case "trip_completed": {
      const rid = str(p.request_id);
      if (rid) {
        const card = next.trips[rid] ?? freshTrip(rid);
        touch(rid, {
          status: "completed",
          completedAt: num(p.completed_at) ?? ev.tick,
          requestedAt: num(p.requested_at) ?? card.requestedAt,
          planId: str(p.plan_id) ?? card.planId,
          revision: num(p.revision) ?? card.revision,
          currentLeg: null,
          pendingApproval: null,
        });
      }
      break;
    }
    case "trip_aborted": {
      const rid = str(p.request_id);
      if (rid) {
        touch(rid, {
          status: "aborted",
          abortReason: str(p.reason),
          currentLeg: null,
          pendingApproval: null,
        });
      }
      break;
    }
    case "allocation": {
      next.counters.allocations += 1;
      break;
    }
    case "conversation_started": {
      next.counters.conversations += 1;
      break;
    }
    case "disruption_injected": {
      const id = str(p.disruption);
      if (id) {
        next.disruptions[id] = {
          id,
          kind: str(p.kind) ?? "unknown",
          target: Array.isArray(p.target) ? p.target.filter((t): t is string => typeof t === "string") : [],
          activation: num(p.activation) ?? ev.tick,
          expiry: num(p.expiry),
          phase: "scheduled",
        };
      }
      break;
    }
    case "disruption_activated": {
      const id = str(p.disruption);
      if (id) {
        const card = next.disruptions[id] ?? {
          id,
          kind: str(p.kind) ?? "unknown",
          target: [],
          activation: ev.tick,
          expiry: null,
          phase: "scheduled" as DisruptionPhase,
        };
        next.disruptions[id] = { ...card, phase: "active" };
      }
      break;
    }
    case "disruption_expired": {
      const id = str(p.disruption);
      if (id) {
        const card = next.disruptions[id];
        if (card) next.disruptions[id] = { ...card, phase: "expired" };
      }
      break;
    }
    default:
      break;
  }
  return next;
}

export function foldAll(state: DashboardState, events: Iterable<EventRecord>): DashboardState {
  let acc = state;
  for (const ev of events) acc = fold(acc, ev);
  return acc;
}

// -- selectors ----------------------------------------------------------------

const NEVER = Number.POSITIVE_INFINITY;

/** Trips in intake order: earliest request first, label as tiebreak. */
export function tripBoard(state: DashboardState): TripCard[] {
  return Object.values(state.trips).sort((a, b) => {
    const ta = a.requestedAt ?? NEVER;
    const tb = b.requestedAt ?? NEVER;
    if (ta !== tb) return ta - tb;
    if (a.label !== b.label) return a.label < b.label ? -1 : 1;
    return a.requestId < b.requestId ? -1 : a.requestId > b.requestId ? 1 : 0;
  });
}

export interface ApprovalTicket extends ApprovalCard {
  countdown: number;
  overdue: boolean;
}

/** Undecided approvals, most urgent first, with ticks-remaining countdown. */
export function approvalQueue(state: DashboardState): ApprovalTicket[] {
  return Object.values(state.approvals)
    .filter((a) => a.decision === null)
    .sort((a, b) => (a.timeoutAt !== b.timeoutAt ? a.timeoutAt - b.timeoutAt : a.approvalId < b.approvalId ? -1 : 1))
    .map((a) => ({
      ...a,
      countdown: Math.max(0, a.timeoutAt - state.tick),
      overdue: state.tick > a.timeoutAt,
    }));
}

export function activeDisruptions(state: DashboardState): DisruptionCard[] {
  return Object.values(state.disruptions)
    .filter((d) => d.phase === "active")
    .sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
}

export interface Summary {
  tick: number;
  runStatus: RunInfo["status"];
  totalTrips: number;
  completed: number;
  aborted: number;
  active: number;
  waiting: number;
  pendingApprovals: number;
  activeDisruptions: number;
  messages: number;
}

export function summary(state: DashboardState): Summary {
  const cards = Object.values(state.trips);
  const count = (s: TripStatus): number => cards.filter((c) => c.status === s).length;
  return {
    tick: state.tick,
    runStatus: state.run.status,
    totalTrips: cards.length,
    completed: count("completed"),
    aborted: count("aborted"),
    active: count("active"),
    waiting: count("requested") + count("planning") + count("awaiting_approval"),
    pendingApprovals: approvalQueue(state).length,
    activeDisruptions: activeDisruptions(state).length,
    messages: state.counters.messages,
  };
}
