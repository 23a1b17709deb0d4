import { ApiError, ReviewApiClient } from './api';
import {
  beginSubmit,
  editDraft,
  initialFormState,
  submitFailed,
  submitSucceeded,
  type FormState,
} from './form';
import {
  renderArbitrationView,
  renderAssignmentQueue,
  renderBanner,
  renderCaseView,
  renderVerdictForm,
} from './views';
import type { Assignment, VerdictDraft } from './types';

type AppOptions = {
  root: HTMLElement;
  baseUrl: string;
  reviewerId: string;
  token?: string;
};

/**
 * DOM glue only: fetch, render, wire events. All state shown is the last
 * API response; reloading the page mid-workflow loses nothing.
 */
export function createApp(options: AppOptions) {
  const client = new ReviewApiClient({
    baseUrl: options.baseUrl,
    token: options.token,
  });
  const root = options.root;
  let current: Assignment | null = null;
  let form: FormState = initialFormState();

  function readDraft(): VerdictDraft {
    const functional = root.querySelector<HTMLInputElement>(
      'input[name="is_functional"]',
    );
    const vulnerable =
      root.querySelector<HTMLInputElement>('input[name="isVul"]');
    const justification = root.querySelector<HTMLTextAreaElement>(
      'textarea[name="justification"]',
    );
    return {
      is_functional: functional?.checked ?? true,
      isVul: vulnerable?.checked ?? false,
      justification: justification?.value ?? '',
    };
  }

  function renderCurrent(): void {
    if (current === null) return;
    const caseHtml =
      current.role === 'arbitration'
        ? renderArbitrationView(current)
        : renderCaseView(current);
    root.innerHTML = caseHtml + renderVerdictForm(form);
    root
      .querySelector('form.verdict-form')
      ?.addEventListener('submit', (event) => {
        event.preventDefault();
        void submit();
      });
  }

  async function submit(): Promise<void> {
    if (current === null) return;
    form = beginSubmit(editDraft(form, readDraft()));
    renderCurrent();
    if (form.phase !== 'submitting') return; // blocked client-side
    try {
      await client.submitVerdict(
        current.case_id,
        options.reviewerId,
        form.draft,
      );
      form = submitSucceeded(form);
      await showQueue();
    } catch (error) {
      // a rejected duplicate (or any API error) surfaces verbatim
      const detail =
        error instanceof ApiError ? error.detail : String(error);
      form = submitFailed(form, detail);
      renderCurrent();
    }
  }

  async function openCase(caseId: string): Promise<void> {
    const assignments = await client.assignments(options.reviewerId);
    current = assignments.find((a) => a.case_id === caseId) ?? null;
    form = initialFormState();
    renderCurrent();
  }

  async function showQueue(): Promise<void> {
    current = null;
    try {
      const assignments = await client.assignments(options.reviewerId);
      root.innerHTML = renderAssignmentQueue(assignments);
      for (const button of root.querySelectorAll<HTMLButtonElement>(
        'button.open-case',
      )) {
        button.addEventListener('click', () => {
          void openCase(button.dataset.caseId ?? '');
        });
      }
    } catch {
      // API unreachable: read-only banner, no local mutation
      root.innerHTML = renderBanner(
        'Review service unreachable. Showing nothing rather than stale state.',
      );
    }
  }

  return { showQueue, openCase };
}
