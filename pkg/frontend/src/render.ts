// View rendering as pure string builders. Everything shown comes
// verbatim from the last server response; the only client-side touch
// is HTML escaping and grouping the legal moves for the picker.

import { LegalMoves, SessionView } from "./api.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderEvolution(view: SessionView): string {
  const items = view.evolution
    .map((game, i) => {
      const cls = i === view.evolution.length - 1 ? ' class="current"' : "";
      return `<li${cls}><code>${escapeHtml(game)}</code></li>`;
    })
    .join("");
  return `<ol class="evolution">${items}</ol>`;
}

export function renderTranscript(view: SessionView): string {
  const entries = view.run.length
    ? view.run
        .map((lam) => `<li><code>${escapeHtml(lam)}</code></li>`)
        .join("")
    : '<li class="empty">no moves yet</li>';
  const marker = `permission granted ${view.permissions} time${
    view.permissions === 1 ? "" : "s"
  }, ${view.steps} agent step${view.steps === 1 ? "" : "s"}`;
  return `<ol class="transcript">${entries}</ol>`
    + `<p class="permissions">${escapeHtml(marker)}</p>`;
}

export function renderBanner(view: SessionView): string {
  let line: string;
  if (view.status === "finished") {
    line = view.outcome === "Machine" ? "Machine wins" : "Environment wins";
  } else if (view.status === "awaiting_env") {
    line = "your move";
  } else {
    line = "machine is thinking…";
  }
  const note = view.note
    ? `<p class="note">${escapeHtml(view.note)}</p>`
    : "";
  return `<p class="banner ${view.status}">${escapeHtml(line)}</p>${note}`;
}

// The picker groups moves by their leading address so wide positions
// stay scannable: replications together, each dotted prefix together.
export function groupLabel(move: string): string {
  if (/^[01]*:$/.test(move)) {
    return "replicate";
  }
  const dot = move.indexOf(".");
  if (dot > 0) {
    return `at ${move.slice(0, dot)}.`;
  }
  return "moves";
}

export function renderMoves(legal: LegalMoves): string {
  if (!legal.legal.length) {
    return '<p class="empty">no legal moves</p>';
  }
  const groups = new Map<string, string[]>();
  for (const move of legal.legal) {
    const label = groupLabel(move);
    const bucket = groups.get(label);
    if (bucket) bucket.push(move);
    else groups.set(label, [move]);
  }
  const parts: string[] = [];
  for (const [label, moves] of groups) {
    const buttons = moves
      .map(
        (m) =>
          `<button class="move" data-move="${escapeHtml(m)}">`
          + `${escapeHtml(m)}</button>`,
      )
      .join("");
    parts.push(
      `<div class="move-group"><span class="group-label">`
        + `${escapeHtml(label)}</span>${buttons}</div>`,
    );
  }
  return parts.join("");
}

export function renderHeader(view: SessionView): string {
  return (
    `<p class="formula"><code>${escapeHtml(view.formula)}</code></p>`
    + `<p class="meta">session ${escapeHtml(view.id)}, domain size `
    + `${view.domain}</p>`
  );
}
