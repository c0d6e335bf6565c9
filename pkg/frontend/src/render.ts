// DOM rendering. Every function here paints a view model produced by
// viewmodel.ts; nothing in this file inspects raw server payloads.

import type { DishCard, MessageBubble, TicketRow, TraceView, UiSession } from './types.js'

export function renderTicketTable(doc: Document, rows: TicketRow[]): HTMLTableElement {
  const table = doc.createElement('table')
  table.className = 'ticket-table'
  const head = table.createTHead().insertRow()
  for (const column of ['Train', 'From', 'Dep', 'To', 'Arr', 'Seats']) {
    const cell = doc.createElement('th')
    cell.textContent = column
    head.appendChild(cell)
  }
  const body = table.createTBody()
  for (const row of rows) {
    const tr = body.insertRow()
    for (const value of [row.trainNo, row.from, row.depTime, row.to, row.arrTime, row.seats]) {
      tr.insertCell().textContent = value
    }
  }
  return table
}

export function renderDishCards(doc: Document, cards: DishCard[]): HTMLElement {
  const wrap = doc.createElement('div')
  wrap.className = 'dish-cards'
  for (const card of cards) {
    const el = doc.createElement('div')
    el.className = 'dish-card'
    const title = doc.createElement('h4')
    title.textContent = card.name
    const meta = doc.createElement('p')
    meta.textContent = `${card.restaurant} · ¥${card.price}`
    el.append(title, meta)
    const badges = doc.createElement('div')
    badges.className = 'badges'
    for (const badge of card.spicinessBadges) {
      const span = doc.createElement('span')
      span.className = `badge badge-${badge}`
      span.textContent = badge.replace('_', ' ')
      badges.appendChild(span)
    }
    el.appendChild(badges)
    wrap.appendChild(el)
  }
  return wrap
}

export function renderTraceInspector(doc: Document, view: TraceView): HTMLElement {
  const container = doc.createElement('details')
  container.className = 'trace-inspector'
  const summary = doc.createElement('summary')
  summary.textContent = `Round ${view.roundIndex} trace (${view.steps.length} steps, ${view.outcome})`
  container.appendChild(summary)
  for (const step of view.steps) {
    const stepEl = doc.createElement('details')
    stepEl.className = 'trace-step'
    stepEl.open = !step.collapsed
    const stepSummary = doc.createElement('summary')
    stepSummary.textContent = `Step ${step.iteration}: ${step.actionLabel}`
    stepEl.appendChild(stepSummary)
    const thought = doc.createElement('p')
    thought.textContent = `Thought: ${step.thought}`
    stepEl.appendChild(thought)
    if (step.actionInput !== null) {
      const input = doc.createElement('p')
      input.textContent = `Action Input: ${step.actionInput}`
      stepEl.appendChild(input)
    }
    if (step.observationText !== null) {
      const obs = doc.createElement('pre')
      obs.className = `observation observation-${step.observationKind}`
      obs.textContent = step.observationText
      stepEl.appendChild(obs)
    }
    container.appendChild(stepEl)
  }
  return container
}

export function renderBubble(doc: Document, bubble: MessageBubble): HTMLElement {
  const el = doc.createElement('div')
  el.className = `bubble bubble-${bubble.role}` + (bubble.failure ? ' bubble-failure' : '')
  const text = doc.createElement('p')
  text.textContent = bubble.text
  el.appendChild(text)
  if (bubble.retryText !== undefined) {
    const retry = doc.createElement('button')
    retry.className = 'retry'
    retry.textContent = 'Retry'
    retry.dataset.retryText = bubble.retryText
    el.appendChild(retry)
  }
  return el
}

export function renderSession(doc: Document, root: HTMLElement, session: UiSession): void {
  root.textContent = ''
  if (session.banner) {
    const banner = doc.createElement('div')
    banner.className = 'banner'
    banner.textContent = session.banner
    root.appendChild(banner)
  }
  for (const bubble of session.messages) {
    const el = renderBubble(doc, bubble)
    root.appendChild(el)
    if (bubble.role === 'agent' && bubble.roundIndex !== undefined) {
      const view = session.traces[bubble.roundIndex]
      if (view) {
        if (view.ticketTable) el.appendChild(renderTicketTable(doc, view.ticketTable))
        if (view.dishCards) el.appendChild(renderDishCards(doc, view.dishCards))
        el.appendChild(renderTraceInspector(doc, view))
      }
    }
  }
  const input = doc.getElementById('message-input') as HTMLInputElement | null
  const send = doc.getElementById('send-button') as HTMLButtonElement | null
  if (input) input.disabled = session.inputDisabled
  if (send) send.disabled = session.inputDisabled
}
