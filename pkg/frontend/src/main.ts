// Bootstrap: profile form -> session; send box -> message round -> trace.

import { ApiClient, RoundInProgressError, TransportFailure } from './api.js'
import { renderSession } from './render.js'
import {
  applyAnswer,
  applyRoundInProgress,
  applyRoundResolved,
  applyTransportFailure,
  beginSend,
  emptySession,
  startSession,
} from './viewmodel.js'
import type { ProfileForm, UiSession } from './types.js'

function apiBase(): string {
  if (typeof window === 'undefined') return ''
  // a ?api=http://host:port query overrides the same-origin default
  return new URLSearchParams(window.location.search).get('api') ?? ''
}

const api = new ApiClient(apiBase())
let session: UiSession = emptySession()

function repaint(): void {
  const root = document.getElementById('chat-root')
  if (root) renderSession(document, root, session)
}

function update(next: UiSession): void {
  session = next
  repaint()
}

async function sendMessage(text: string): Promise<void> {
  if (!session.sessionId || !text.trim()) return
  update(beginSend(session, text))
  try {
    const reply = await api.postMessage(session.sessionId, text)
    const trace = await api.getTrace(session.sessionId, reply.round_index)
    update(applyAnswer(session, reply, trace))
  } catch (err) {
    if (err instanceof RoundInProgressError) {
      update(applyRoundInProgress(session))
      const blocking = session.messages.filter((b) => b.role === 'agent').length + 1
      try {
        await api.waitForRound(session.sessionId, blocking)
      } finally {
        update(applyRoundResolved(session))
      }
    } else if (err instanceof TransportFailure) {
      update(applyTransportFailure(session, text, err.message))
    } else {
      update(applyTransportFailure(session, text, String(err)))
    }
  }
}

function profileFromForm(form: HTMLFormElement): ProfileForm {
  const data = new FormData(form)
  const ageRaw = String(data.get('age') ?? '').trim()
  return {
    passenger_id: String(data.get('passenger_id') ?? '').trim() || `web-${Date.now()}`,
    gender: String(data.get('gender') ?? '').trim() || null,
    age: ageRaw ? Number(ageRaw) : null,
    place_of_birth: String(data.get('place_of_birth') ?? '').trim() || null,
  }
}

export function wireUp(): void {
  const profileForm = document.getElementById('profile-form') as HTMLFormElement | null
  profileForm?.addEventListener('submit', async (event) => {
    event.preventDefault()
    const profile = profileFromForm(profileForm)
    const created = await api.createSession(profile)
    update(startSession(session, created.session_id, profile))
    profileForm.hidden = true
  })

  const input = document.getElementById('message-input') as HTMLInputElement | null
  const send = document.getElementById('send-button') as HTMLButtonElement | null
  send?.addEventListener('click', () => {
    const text = input?.value ?? ''
    if (input) input.value = ''
    void sendMessage(text)
  })
  input?.addEventListener('keydown', (event) => {
    if (event.key === 'Enter' && !session.inputDisabled) {
      const text = input.value
      input.value = ''
      void sendMessage(text)
    }
  })
  document.getElementById('chat-root')?.addEventListener('click', (event) => {
    const target = event.target as HTMLElement
    if (target.classList.contains('retry') && target.dataset.retryText) {
      void sendMessage(target.dataset.retryText)
    }
  })
  repaint()
}

if (typeof document !== 'undefined' && document.getElementById('chat-root')) {
  wireUp()
}
