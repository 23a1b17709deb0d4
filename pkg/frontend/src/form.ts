import type { VerdictDraft } from './types';

/**
 * Client-side mirror of the server's verdict invariant: a verdict without
 * a justification is refused before it ever reaches the wire. The server
 * enforces the same rule, so a forced submission is rejected there too.
 */
export function validateDraft(draft: VerdictDraft): string | null {
  if (!draft.justification.trim()) {
    return 'A written justification is required.';
  }
  return null;
}

export type FormPhase = 'editing' | 'submitting' | 'submitted' | 'error';

export type FormState = {
  phase: FormPhase;
  draft: VerdictDraft;
  error: string | null;
};

export function initialFormState(): FormState {
  return {
    phase: 'editing',
    draft: { is_functional: true, isVul: false, justification: '' },
    error: null,
  };
}

/** Gate a submission attempt; invalid drafts stay editable with an error. */
export function beginSubmit(state: FormState): FormState {
  if (state.phase !== 'editing' && state.phase !== 'error') {
    return state; // optimistic disable: one in-flight submission at a time
  }
  const problem = validateDraft(state.draft);
  if (problem) {
    return { ...state, phase: 'error', error: problem };
  }
  return { ...state, phase: 'submitting', error: null };
}

export function submitSucceeded(state: FormState): FormState {
  return { ...state, phase: 'submitted', error: null };
}

/** Reconcile a server rejection; the server's message is shown verbatim. */
export function submitFailed(state: FormState, detail: string): FormState {
  return { ...state, phase: 'error', error: detail };
}

export function editDraft(state: FormState, draft: VerdictDraft): FormState {
  if (state.phase === 'submitting' || state.phase === 'submitted') {
    return state;
  }
  return { phase: 'editing', draft, error: null };
}
