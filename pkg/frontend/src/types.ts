/**
 * View-model mirrors of the review API's payloads.
 *
 * These types carry no fields beyond what the API returns; the UI holds no
 * authoritative state and every displayed value originates from a response.
 */

export type ReviewRole = 'initial' | 'arbitration';

export type CaseMaterials = {
  source_code?: string;
  translated_code?: string;
  cwe?: string;
  patch_description?: string;
  patch_locations?: Array<[number, number]>;
  cve_record?: string;
  source_lang?: string;
  target_lang?: string;
  model_id?: string;
};

export type InitialVerdict = {
  reviewer_id: string;
  is_functional: boolean;
  isVul: boolean;
  justification: string;
  submitted_at: number;
};

export type Assignment = {
  case_id: string;
  sample_id: string;
  translation_id: string;
  materials: CaseMaterials;
  role: ReviewRole;
  initial_verdicts?: InitialVerdict[];
};

export type ConflictCase = {
  case_id: string;
  sample_id: string;
  translation_id: string;
  assigned: string[];
  arbiter: string | null;
  initial_verdicts: InitialVerdict[];
};

export type AuditBatch = {
  audit_id: string;
  seed: number;
  fraction: number;
  case_ids: string[];
};

export type VerdictDraft = {
  is_functional: boolean;
  isVul: boolean;
  justification: string;
};

export type SubmitResult = {
  case_id: string;
  state: string;
};

export type HealthStatus = {
  status: string;
  cases: number;
};
