// Pure projections from server records to view models, and the session
// state transitions the UI goes through around one message round.

import type {
  DishCard,
  MessageBubble,
  MessageReply,
  StepRecord,
  StepView,
  TicketRow,
  TraceRecord,
  TraceView,
  UiSession,
} from './types.js'

export function emptySession(): UiSession {
  return {
    sessionId: null,
    profile: null,
    messages: [],
    traces: {},
    inputDisabled: true,
    banner: null,
  }
}

function formatSeats(seats: unknown): string {
  if (!Array.isArray(seats)) return ''
  return seats
    .map((s) => {
      const [name, remaining, price] = s as [string, number, number]
      return `${name} ¥${price} (${remaining} left)`
    })
    .join('; ')
}

function hhmm(iso: string): string {
  return iso.length >= 16 ? iso.slice(11, 16) : iso
}

export function ticketRowsFromStep(step: StepRecord): TicketRow[] | null {
  const payload = step.observation?.payload
  const services = payload && (payload['services'] as Record<string, unknown>[] | undefined)
  if (!services) return null
  return services.map((svc) => ({
    trainNo: String(svc['train_no']),
    from: String(svc['from']),
    to: String(svc['to']),
    depTime: hhmm(String(svc['dep_time'])),
    arrTime: hhmm(String(svc['arr_time'])),
    seats: formatSeats(svc['seats']),
  }))
}

export function dishCardsFromStep(step: StepRecord): DishCard[] | null {
  const payload = step.observation?.payload
  const recs = payload && (payload['recommendations'] as Record<string, unknown>[] | undefined)
  if (!recs) return null
  return recs.map((rec) => ({
    name: String(rec['name']),
    restaurant: String(rec['restaurant']),
    price: Number(rec['price']),
    spicinessBadges: (rec['spiciness'] as string[] | undefined) ?? [],
    basis: String(rec['basis'] ?? ''),
  }))
}

function stepView(step: StepRecord): StepView {
  const isToolCall = step.action.variant === 'tool_call'
  const inputText = step.action.input
    ? Object.entries(step.action.input)
        .map(([k, v]) => `${k}=${v}`)
        .join(', ')
    : ''
  return {
    iteration: step.iteration,
    thought: step.thought,
    actionLabel: isToolCall ? `Action: ${step.action.tool ?? ''}` : 'Final Answer',
    actionInput: isToolCall ? inputText : null,
    observationKind: step.observation ? step.observation.kind : null,
    observationText: step.observation ? step.observation.text : null,
    collapsed: true, // the inspector starts collapsed to keep the chat clean
  }
}

/**
 * Project a server trace record into the inspector's view model. The
 * rendered step list always has exactly as many entries as the server
 * trace; the last tool payloads of interest become widgets.
 */
export function traceView(record: TraceRecord): TraceView {
  let ticketTable: TicketRow[] | null = null
  let dishCards: DishCard[] | null = null
  for (const step of record.steps) {
    if (step.observation?.kind !== 'success') continue
    ticketTable = ticketRowsFromStep(step) ?? ticketTable
    dishCards = dishCardsFromStep(step) ?? dishCards
  }
  return {
    roundIndex: record.round_index,
    outcome: record.outcome,
    steps: record.steps.map(stepView),
    ticketTable,
    dishCards,
  }
}

export function outcomeBanner(reply: MessageReply): string | null {
  if (reply.outcome === 'answered') return null
  const labels: Record<string, string> = {
    budget_exhausted: 'The agent ran out of iterations before finding an answer.',
    parse_failed: 'The agent reply could not be interpreted.',
  }
  const label = labels[reply.outcome] ?? `Round ended without an answer (${reply.outcome}).`
  return `${label} See the round ${reply.round_index} trace for details.`
}

// --- state transitions ------------------------------------------------------

export function startSession(session: UiSession, sessionId: string, profile: UiSession['profile']): UiSession {
  return { ...session, sessionId, profile, inputDisabled: false, banner: null }
}

export function beginSend(session: UiSession, text: string): UiSession {
  const bubble: MessageBubble = { role: 'passenger', text }
  return {
    ...session,
    messages: [...session.messages, bubble],
    inputDisabled: true,
    banner: null,
  }
}

export function applyAnswer(
  session: UiSession,
  reply: MessageReply,
  trace: TraceRecord,
): UiSession {
  const view = traceView(trace)
  const bubble: MessageBubble = {
    role: 'agent',
    text: reply.answer ?? '(no answer)',
    roundIndex: reply.round_index,
    failure: reply.outcome !== 'answered',
  }
  return {
    ...session,
    messages: [...session.messages, bubble],
    traces: { ...session.traces, [reply.round_index]: view },
    inputDisabled: false,
    banner: outcomeBanner(reply),
  }
}

/** Transport failures render inline and keep the text around for retry. */
export function applyTransportFailure(session: UiSession, text: string, message: string): UiSession {
  const bubble: MessageBubble = {
    role: 'agent',
    text: `Could not reach the agent: ${message}`,
    failure: true,
    retryText: text,
  }
  return {
    ...session,
    messages: [...session.messages, bubble],
    inputDisabled: false,
  }
}

/** A concurrent round is still running: input stays disabled until it ends. */
export function applyRoundInProgress(session: UiSession): UiSession {
  return {
    ...session,
    inputDisabled: true,
    banner: 'A round is already running for this session; waiting for it to finish.',
  }
}

export function applyRoundResolved(session: UiSession): UiSession {
  return { ...session, inputDisabled: false, banner: null }
}
