// Wire types mirroring the session API's JSON bodies, plus the view
// models the renderer consumes. The client performs no recommendation or
// parsing logic of its own: everything below is a projection of server
// payloads.

export interface ProfileForm {
  passenger_id: string
  gender?: string | null
  age?: number | null
  place_of_birth?: string | null
}

export interface CreateSessionReply {
  session_id: string
}

export interface MessageReply {
  answer: string | null
  outcome: string
  round_index: number
}

export interface ObservationRecord {
  kind: 'success' | 'error'
  text: string
  payload: Record<string, unknown> | null
}

export interface ActionRecord {
  variant: 'tool_call' | 'final_answer'
  tool?: string
  input?: Record<string, string>
  answer?: string
}

export interface StepRecord {
  iteration: number
  thought: string
  action: ActionRecord
  observation: ObservationRecord | null
}

export interface TraceRecord {
  round_index: number
  question: string
  steps: StepRecord[]
  answer: string | null
  outcome: string
}

export interface ApiErrorBody {
  code: string
  message: string
}

// --- view models -----------------------------------------------------------

export interface TicketRow {
  trainNo: string
  from: string
  to: string
  depTime: string
  arrTime: string
  seats: string
}

export interface DishCard {
  name: string
  restaurant: string
  price: number
  spicinessBadges: string[]
  basis: string
}

export interface StepView {
  iteration: number
  thought: string
  actionLabel: string
  actionInput: string | null
  observationKind: 'success' | 'error' | null
  observationText: string | null
  collapsed: boolean
}

export interface TraceView {
  roundIndex: number
  outcome: string
  steps: StepView[]
  ticketTable: TicketRow[] | null
  dishCards: DishCard[] | null
}

export interface MessageBubble {
  role: 'passenger' | 'agent'
  text: string
  roundIndex?: number
  pending?: boolean
  failure?: boolean
  retryText?: string
}

export interface UiSession {
  sessionId: string | null
  profile: ProfileForm | null
  messages: MessageBubble[]
  traces: Record<number, TraceView>
  inputDisabled: boolean
  banner: string | null
}
