// Thin typed client over the session API. No streaming: a message POST
// returns the finished answer, and the round's trace is fetched afterwards.

import type {
  ApiErrorBody,
  CreateSessionReply,
  MessageReply,
  ProfileForm,
  TraceRecord,
} from './types.js'

export class ApiError extends Error {
  readonly code: string
  readonly status: number

  constructor(status: number, body: ApiErrorBody) {
    super(body.message)
    this.code = body.code
    this.status = status
  }
}

export class RoundInProgressError extends ApiError {}

export class TransportFailure extends Error {}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, init)
    } catch (err) {
      throw new TransportFailure(`request to ${path} failed: ${String(err)}`)
    }
    if (!response.ok) {
      let body: ApiErrorBody
      try {
        body = (await response.json()) as ApiErrorBody
      } catch {
        body = { code: 'unknown', message: `HTTP ${response.status}` }
      }
      if (response.status === 409 || body.code === 'round_in_progress') {
        throw new RoundInProgressError(response.status, body)
      }
      throw new ApiError(response.status, body)
    }
    return (await response.json()) as T
  }

  health(): Promise<{ status: string }> {
    return this.request('/api/health')
  }

  createSession(profile: ProfileForm): Promise<CreateSessionReply> {
    return this.request('/api/sessions', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ profile }),
    })
  }

  postMessage(sessionId: string, text: string): Promise<MessageReply> {
    return this.request(`/api/sessions/${sessionId}/messages`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ text }),
    })
  }

  getTrace(sessionId: string, roundIndex: number): Promise<TraceRecord> {
    return this.request(`/api/sessions/${sessionId}/traces/${roundIndex}`)
  }

  /**
   * After a RoundInProgress rejection, poll until the blocking round's
   * trace becomes readable, then resolve. Used to re-enable the input.
   */
  async waitForRound(
    sessionId: string,
    roundIndex: number,
    attempts = 20,
    delayMs = 250,
  ): Promise<TraceRecord> {
    let lastError: unknown = null
    for (let i = 0; i < attempts; i++) {
      try {
        return await this.getTrace(sessionId, roundIndex)
      } catch (err) {
        lastError = err
        await new Promise((resolve) => setTimeout(resolve, delayMs))
      }
    }
    throw lastError instanceof Error ? lastError : new TransportFailure('poll timed out')
  }
}
