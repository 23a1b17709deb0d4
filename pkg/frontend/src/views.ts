import { escapeHtml, renderCodePane } from './highlight';
import type { FormState } from './form';
import type {
  Assignment,
  AuditBatch,
  ConflictCase,
  InitialVerdict,
} from './types';

/**
 * Pure HTML renderers. Every value shown comes from an API payload passed
 * in by the caller; the functions keep no state of their own.
 */

export function renderBanner(message: string): string {
  return `<div class="banner banner-offline" role="alert">${escapeHtml(
    message,
  )}</div>`;
}

export function renderAssignmentQueue(assignments: Assignment[]): string {
  if (assignments.length === 0) {
    return '<p class="empty-queue">No open assignments.</p>';
  }
  const items = assignments.map((a) => {
    const badge =
      a.role === 'arbitration'
        ? '<span class="badge badge-arbitration">arbitration</span>'
        : '<span class="badge badge-initial">initial</span>';
    return (
      `<li class="queue-item" data-case-id="${escapeHtml(a.case_id)}">` +
      `<button class="open-case" data-case-id="${escapeHtml(a.case_id)}">` +
      `${escapeHtml(a.case_id)}</button> ${badge}</li>`
    );
  });
  return `<ul class="assignment-queue">${items.join('')}</ul>`;
}

export function renderCaseView(assignment: Assignment): string {
  const m = assignment.materials;
  const spans = m.patch_locations ?? [];
  const sourcePane = renderCodePane(m.source_code ?? '', spans, 'pane-source');
  const translatedPane = renderCodePane(
    m.translated_code ?? '',
    [],
    'pane-translated',
  );
  const cwePanel =
    `<section class="panel panel-cwe"><h3>Weakness</h3>` +
    `<p>${escapeHtml(m.cwe ?? 'unknown')}</p>` +
    `<p class="patch-description">${escapeHtml(
      m.patch_description ?? '',
    )}</p></section>`;
  const cvePanel = m.cve_record
    ? `<section class="panel panel-cve"><h3>CVE record</h3>` +
      `<p>${escapeHtml(m.cve_record)}</p></section>`
    : '';
  const header =
    `<header class="case-header"><h2>${escapeHtml(assignment.case_id)}</h2>` +
    `<p>${escapeHtml(m.source_lang ?? '?')} &rarr; ${escapeHtml(
      m.target_lang ?? '?',
    )}</p></header>`;
  return (
    `<article class="case-view" data-case-id="${escapeHtml(
      assignment.case_id,
    )}">` +
    header +
    `<div class="panes">` +
    `<div class="pane"><h3>Source</h3>${sourcePane}</div>` +
    `<div class="pane"><h3>Translation</h3>${translatedPane}</div>` +
    `</div>` +
    cwePanel +
    cvePanel +
    `</article>`
  );
}

export function renderVerdictForm(state: FormState): string {
  const disabled =
    state.phase === 'submitting' || state.phase === 'submitted'
      ? ' disabled'
      : '';
  const error = state.error
    ? `<p class="form-error" role="alert">${escapeHtml(state.error)}</p>`
    : '';
  const d = state.draft;
  return (
    `<form class="verdict-form" data-phase="${state.phase}">` +
    `<label><input type="checkbox" name="is_functional"` +
    `${d.is_functional ? ' checked' : ''}${disabled}> functionally correct` +
    `</label>` +
    `<label><input type="checkbox" name="isVul"` +
    `${d.isVul ? ' checked' : ''}${disabled}> vulnerable</label>` +
    `<label>justification<textarea name="justification"${disabled}>` +
    `${escapeHtml(d.justification)}</textarea></label>` +
    error +
    `<button type="submit"${disabled}>Submit verdict</button>` +
    `</form>`
  );
}

function renderPriorVerdict(v: InitialVerdict, index: number): string {
  return (
    `<section class="prior-verdict" data-index="${index}">` +
    `<h4>Reviewer ${index + 1}</h4>` +
    `<p>functional: ${v.is_functional ? 'yes' : 'no'}; ` +
    `vulnerable: ${v.isVul ? 'yes' : 'no'}</p>` +
    `<blockquote class="prior-justification">${escapeHtml(
      v.justification,
    )}</blockquote>` +
    `</section>`
  );
}

/**
 * Arbitration view: the blind lifts here only. Exactly two prior verdicts
 * must be present; anything else is a data error worth failing loudly on.
 */
export function renderArbitrationView(assignment: Assignment): string {
  const verdicts = assignment.initial_verdicts ?? [];
  if (assignment.role !== 'arbitration' || verdicts.length !== 2) {
    throw new Error(
      `arbitration view needs exactly 2 prior verdicts, got ${verdicts.length}`,
    );
  }
  return (
    renderCaseView(assignment) +
    `<div class="arbitration-context">` +
    verdicts.map(renderPriorVerdict).join('') +
    `</div>`
  );
}

export function renderConflictQueue(conflicts: ConflictCase[]): string {
  if (conflicts.length === 0) {
    return '<p class="empty-queue">No conflicted cases.</p>';
  }
  const rows = conflicts.map(
    (c) =>
      `<li class="conflict-item" data-case-id="${escapeHtml(c.case_id)}">` +
      `${escapeHtml(c.case_id)} (reviewers: ${c.assigned
        .map(escapeHtml)
        .join(', ')})</li>`,
  );
  return `<ul class="conflict-queue">${rows.join('')}</ul>`;
}

export function renderAuditView(batch: AuditBatch): string {
  const rows = batch.case_ids.map(
    (id) =>
      `<li class="audit-case" data-case-id="${escapeHtml(id)}">` +
      `${escapeHtml(id)} ` +
      `<button class="launch-rereview" data-case-id="${escapeHtml(id)}">` +
      `re-review</button></li>`,
  );
  return (
    `<section class="audit-view" data-audit-id="${escapeHtml(
      batch.audit_id,
    )}">` +
    `<h2>Audit ${escapeHtml(batch.audit_id)}</h2>` +
    `<p>seed ${batch.seed}, fraction ${batch.fraction}, ` +
    `${batch.case_ids.length} cases</p>` +
    `<ul>${rows.join('')}</ul></section>`
  );
}
