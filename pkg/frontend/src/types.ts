// Payload shapes of the audit-service API. The UI renders these verbatim;
// it never computes a metric itself.

export interface RunInfo {
  run_id: string;
  created_at: number | null;
  updated_at: number | null;
  has_suite: boolean;
  has_compliance: boolean;
}

export interface CategoryEntry {
  id: number;
  name: string;
  color: [number, number, number];
}

export type VerdictValue = "accepted" | "rejected";

export interface VariantSummary {
  sample_id: string;
  condition: string;
  mean_iou: number | null;
  error: string | null;
  verdict: VerdictValue;
  audited: boolean;
  image_url: string;
}

export interface SceneSummary {
  scene_id: string;
  variants: VariantSummary[];
}

export type CellStatus = "pass" | "fail" | "insufficient-evidence";

export interface ComplianceCell {
  condition: string;
  category_id: number;
  iou: number | null;
  threshold: number;
  status: CellStatus;
}

export interface ConditionCompliance {
  condition: string;
  status: CellStatus;
  total_samples: number;
  accepted: number;
  rejected: number;
  audited: number;
  audited_fraction: number;
  mean_iou: number | null;
  macro_all: number | null;
  freq_weighted: number | null;
}

export interface ComplianceReport {
  overall: CellStatus;
  default_threshold: number;
  conditions: ConditionCompliance[];
  cells: ComplianceCell[];
}

export interface EffectiveVerdict {
  sample_id: string;
  verdict: VerdictValue;
  reason: string;
  author: string;
}

export interface VerdictResponse {
  effective: EffectiveVerdict;
  affected_cells: ComplianceCell[];
  compliance: ComplianceReport;
}

export interface DropFlagInfo {
  step: number;
  iou_before: number;
  iou_after: number;
  delta: number;
  kind: "drop" | "recovery";
  scene_id: string;
  category_id: number;
}

export interface SweepReport {
  scene_id: string;
  from: string;
  to: string;
  focus_category: number;
  lambdas: number[];
  focus_series: (number | null)[];
  drops: DropFlagInfo[];
  errors: Record<string, string>;
}

export interface SweepSummary {
  scene_id: string;
  from: string;
  to: string;
  focus_category: number;
}
