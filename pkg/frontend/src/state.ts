/** Pure view-model logic for the job lifecycle; no DOM dependencies. */

import { JOB_STATES, type JobState, type JobStatus } from "./api.js";

const PROCESSING_ORDER: readonly JobState[] = JOB_STATES.filter(
  (s) => s !== "done" && s !== "failed",
);

export function isTerminal(state: JobState): boolean {
  return state === "done" || state === "failed";
}

export function isJobState(value: string): value is JobState {
  return (JOB_STATES as readonly string[]).includes(value);
}

/** Fraction of the processing sequence completed, for the progress bar. */
export function progressFraction(state: JobState): number {
  if (state === "done") return 1;
  if (state === "failed") return 1;
  const index = PROCESSING_ORDER.indexOf(state);
  return index < 0 ? 0 : index / PROCESSING_ORDER.length;
}

/** Human label per state; exhaustive so new states cannot be forgotten. */
export function describeState(state: JobState): string {
  switch (state) {
    case "queued":
      return "Waiting in the queue";
    case "extracting":
      return "Extracting audio from the video";
    case "segmenting":
      return "Detecting speech segments";
    case "transcribing":
      return "Transcribing speech";
    case "translating":
      return "Translating the transcript";
    case "synthesizing":
      return "Synthesizing target-language speech";
    case "refining":
      return "Matching timing and voice";
    case "lipsync":
      return "Preparing lip synchronization";
    case "muxing":
      return "Building the output video";
    case "done":
      return "Done";
    case "failed":
      return "Failed";
    default: {
      const unreachable: never = state;
      throw new Error(`unhandled job state ${unreachable as string}`);
    }
  }
}

/** Poll delay schedule: 2 s base, backing off to 10 s. */
export function pollDelayMs(attempt: number): number {
  const delay = 2000 * Math.pow(1.5, Math.max(0, attempt));
  return Math.min(delay, 10000);
}

export type JobPhase = "working" | "done" | "failed";

export interface JobViewModel {
  phase: JobPhase;
  label: string;
  progress: number;
  completedStages: string[];
  error?: string;
  links?: { video: string; transcript: string; source: string };
}

export function toViewModel(status: JobStatus): JobViewModel {
  const phase: JobPhase =
    status.state === "done" ? "done" : status.state === "failed" ? "failed" : "working";
  return {
    phase,
    label: describeState(status.state),
    progress: progressFraction(status.state),
    completedStages: status.stage_progress.map((p) => p.stage),
    error: status.error,
    links: status.result_links,
  };
}

export interface SurveyForm {
  rater_id: string;
  lip_sync: number | null;
  translation_quality: number | null;
  audio_quality: number | null;
}

export function emptySurvey(): SurveyForm {
  return { rater_id: "", lip_sync: null, translation_quality: null, audio_quality: null };
}

/** Submission is allowed only when all three scores and a rater id are set. */
export function surveyComplete(form: SurveyForm): boolean {
  return (
    form.rater_id.trim().length > 0 &&
    isValidScore(form.lip_sync) &&
    isValidScore(form.translation_quality) &&
    isValidScore(form.audio_quality)
  );
}

export function isValidScore(value: number | null): value is number {
  return value !== null && Number.isInteger(value) && value >= 1 && value <= 5;
}
