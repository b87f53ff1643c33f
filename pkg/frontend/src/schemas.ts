/**
 * Wire schemas for everything the dashboard reads from the gateway.
 *
 * Payload schemas are passthrough on purpose: the log carries more detail
 * than the board renders, and unknown extra keys must never break the UI.
 */

import { z } from "zod";

// -- plan documents ---------------------------------------------------------

export const RouteSchema = z
  .object({
    nodes: z.array(z.string()),
    edges: z.array(z.string()),
    total_time: z.number(),
  })
  .passthrough();

export const LegSchema = z
  .object({
    leg_id: z.string(),
    mode: z.string(),
    origin: z.string(),
    destination: z.string(),
    route: RouteSchema,
    planned_start: z.number(),
    planned_end: z.number(),
    assigned_resource: z.string().nullable(),
    completed: z.boolean(),
  })
  .passthrough();

export const PlanSchema = z
  .object({
    plan_id: z.string(),
    request_id: z.string(),
    revision: z.number().int(),
    status: z.string(),
    legs: z.array(LegSchema),
  })
  .passthrough();

export type PlanDoc = z.infer<typeof PlanSchema>;

// -- event log records ------------------------------------------------------

export const EventEnvelope = z.object({
  kind: z.string().min(1),
  payload: z.record(z.unknown()),
  seq: z.number().int().nonnegative(),
  tick: z.number().int().nonnegative(),
});

export type EventRecord = z.infer<typeof EventEnvelope>;

export const RunStartedPayload = z
  .object({
    run_id: z.string(),
    scenario: z.string(),
    seed: z.number().int(),
    strategy: z.string(),
  })
  .passthrough();

export const RunFinishedPayload = z
  .object({
    tick: z.number().int(),
    trips: z.object({
      completed: z.number().int(),
      aborted: z.number().int(),
      open: z.number().int(),
    }),
  })
  .passthrough();

export const PassengerUtterancePayload = z
  .object({
    passenger: z.string(),
    request_id: z.string(),
    text: z.string(),
  })
  .passthrough();

export const TaskSpecPayload = z
  .object({
    passenger: z.string(),
    request_id: z.string(),
    spec: z.record(z.unknown()),
  })
  .passthrough();

export const PlanEventPayload = z
  .object({
    plan: PlanSchema,
    plan_id: z.string(),
    request_id: z.string(),
    revision: z.number().int(),
  })
  .passthrough();

export const GateStepPayload = z
  .object({
    step: z.number().int().min(1).max(3),
    outcome: z.enum(["pass", "fail", "pending", "skipped"]),
    plan_id: z.string(),
    request_id: z.string(),
    revision: z.number().int(),
  })
  .passthrough();

export const GateOutcomePayload = z
  .object({
    outcome: z.enum(["cleared", "rejected", "fallback_activated"]),
    plan_id: z.string(),
    request_id: z.string(),
    revision: z.number().int(),
    fallback_revision: z.number().int().optional(),
  })
  .passthrough();

export const ApprovalPendingPayload = z
  .object({
    approval_id: z.string(),
    request_id: z.string(),
    plan_id: z.string(),
    revision: z.number().int(),
    risk_class: z.string(),
    submitted_at: z.number().int(),
    timeout_at: z.number().int(),
    fallback: PlanSchema.nullable(),
    decision: z.string().nullable(),
    decided_by: z.string().nullable(),
  })
  .passthrough();

export const ApprovalDecidedPayload = z
  .object({
    approval_id: z.string(),
    decision: z.string(),
    decided_by: z.string(),
  })
  .passthrough();

export const StatusPayload = z
  .object({
    event: z.enum(["leg_started", "leg_progress", "leg_completed"]),
    leg_id: z.string(),
    mode: z.string(),
    at_node: z.string(),
    request_id: z.string(),
    plan_id: z.string(),
    revision: z.number().int(),
  })
  .passthrough();

export const AllocationPayload = z
  .object({
    request_id: z.string(),
    resource_id: z.string(),
    task_id: z.string(),
    alternatives_considered: z.number().int(),
  })
  .passthrough();

export const TripCompletedPayload = z
  .object({
    request_id: z.string(),
    plan_id: z.string(),
    revision: z.number().int(),
    requested_at: z.number().int(),
    completed_at: z.number().int(),
    duration: z.number(),
  })
  .passthrough();

export const TripAbortedPayload = z
  .object({
    request_id: z.string(),
    reason: z.string(),
  })
  .passthrough();

export const ConversationStartedPayload = z
  .object({
    conv: z.string(),
    query: z.string(),
    strategy: z.string(),
  })
  .passthrough();

export const ConversationFinishedPayload = z
  .object({
    conv: z.string(),
    outcome: z.string(),
  })
  .passthrough();

export const DisruptionInjectedPayload = z
  .object({
    disruption: z.string(),
    kind: z.string(),
    target: z.array(z.string()),
    activation: z.number().int(),
    expiry: z.number().int().nullable(),
  })
  .passthrough();

export const DisruptionEventPayload = z
  .object({
    disruption: z.string(),
  })
  .passthrough();

export const CommandResultPayload = z
  .object({
    command_id: z.string(),
    kind: z.string(),
    error: z.string().optional(),
  })
  .passthrough();

export const MessagePayload = z
  .object({
    message_id: z.string(),
    sender: z.string(),
    recipient: z.string(),
    kind: z.string(),
    payload: z.record(z.unknown()),
    correlation: z.string().nullable(),
  })
  .passthrough();

const PAYLOAD_SCHEMAS: Record<string, z.ZodTypeAny> = {
  run_started: RunStartedPayload,
  run_finished: RunFinishedPayload,
  passenger_utterance: PassengerUtterancePayload,
  task_spec: TaskSpecPayload,
  plan_proposed: PlanEventPayload,
  plan_activated: PlanEventPayload,
  gate_step: GateStepPayload,
  gate_outcome: GateOutcomePayload,
  approval_pending: ApprovalPendingPayload,
  approval_decided: ApprovalDecidedPayload,
  status: StatusPayload,
  allocation: AllocationPayload,
  trip_completed: TripCompletedPayload,
  trip_aborted: TripAbortedPayload,
  conversation_started: ConversationStartedPayload,
  conversation_finished: ConversationFinishedPayload,
  disruption_injected: DisruptionInjectedPayload,
  disruption_activated: DisruptionEventPayload,
  disruption_expired: DisruptionEventPayload,
  command_accepted: CommandResultPayload,
  command_rejected: CommandResultPayload,
  message: MessagePayload,
};

/** Validate one raw log record. Unknown kinds keep their payload opaque. */
export function parseEvent(raw: unknown): EventRecord {
  const env = EventEnvelope.parse(raw);
  const payloadSchema = PAYLOAD_SCHEMAS[env.kind];
  if (payloadSchema) {
    payloadSchema.parse(env.payload);
  }
  return env;
}

// -- REST documents ---------------------------------------------------------

export const RunDescriptorSchema = z.object({
  run_id: z.string(),
  scenario: z.string(),
  seed: z.number().int(),
  status: z.string(),
  tick: z.number().int(),
  strategy: z.string(),
});

export type RunDescriptor = z.infer<typeof RunDescriptorSchema>;

export const TripAckSchema = z.object({
  request_id: z.string(),
  command_id: z.string(),
  at_tick: z.number().int(),
});

export const CommandAckSchema = z.object({
  command_id: z.string(),
  kind: z.string(),
  at_tick: z.number().int(),
});

export const ApprovalViewSchema = z.object({
  approval_id: z.string(),
  request_id: z.string(),
  plan_id: z.string(),
  revision: z.number().int(),
  risk_class: z.string(),
  submitted_at: z.number().int(),
  timeout_at: z.number().int(),
  fallback: PlanSchema.nullable(),
  decision: z.string().nullable(),
  decided_by: z.string().nullable(),
});

export type ApprovalView = z.infer<typeof ApprovalViewSchema>;

export const TripRowSchema = z
  .object({
    request_id: z.string(),
    passenger: z.string(),
    label: z.string(),
    requested_at: z.number().int().nullable(),
    status: z.string(),
    plan_id: z.string().nullable(),
    revision: z.number().int(),
    at_node: z.string().nullable(),
    executing_leg: z.string().nullable(),
    pending_approval: z.string().nullable(),
    completed_at: z.number().int().nullable(),
  })
  .passthrough();

export const ResourceRowSchema = z
  .object({
    id: z.string(),
    kind: z.string(),
    location: z.string(),
    battery: z.number(),
    status: z.string(),
    assigned_task: z.string().nullable(),
  })
  .passthrough();

export const StateViewSchema = z
  .object({
    run_id: z.string(),
    tick: z.number().int(),
    status: z.string(),
    strategy: z.string(),
    trips: z.array(TripRowSchema),
    resources: z.array(ResourceRowSchema),
    active_disruptions: z.array(z.record(z.unknown())),
    pending_approvals: z.array(z.record(z.unknown())),
  })
  .passthrough();

export type StateView = z.infer<typeof StateViewSchema>;

export const MetricsViewSchema = z
  .object({
    run_id: z.string(),
    tick: z.number().int(),
    status: z.string(),
    trips: z
      .object({
        total: z.number().int(),
        completed: z.number().int(),
        aborted: z.number().int(),
        open: z.number().int(),
      })
      .passthrough(),
    mean_trip_duration: z.number().nullable(),
    reasoner_fallbacks: z.number().int(),
    coordination: z.record(z.unknown()),
  })
  .passthrough();

export type MetricsView = z.infer<typeof MetricsViewSchema>;

export const EventsPageSchema = z.object({
  events: z.array(EventEnvelope),
  next: z.number().int().nonnegative(),
});

export type EventsPage = z.infer<typeof EventsPageSchema>;

export const ErrorBodySchema = z.object({
  error: z.string(),
  detail: z.unknown(),
});
