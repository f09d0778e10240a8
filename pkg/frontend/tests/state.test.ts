import { describe, expect, it } from "vitest";

import { JOB_STATES, type JobState, type JobStatus } from "../src/api.js";
import {
  describeState,
  emptySurvey,
  isJobState,
  isTerminal,
  pollDelayMs,
  progressFraction,
  surveyComplete,
  toViewModel,
} from "../src/state.js";

describe("job state machine", () => {
  it("labels every declared state", () => {
    for (const state of JOB_STATES) {
      expect(describeState(state)).toBeTruthy();
    }
  });

  it("rejects unknown state strings", () => {
    expect(isJobState("queued")).toBe(true);
    expect(isJobState("exploding")).toBe(false);
  });

  it("only done and failed are terminal", () => {
    const terminal = JOB_STATES.filter(isTerminal);
    expect(terminal).toEqual(["done", "failed"]);
  });

  it("progress is monotone over the processing sequence", () => {
    const working = JOB_STATES.filter((s) => !isTerminal(s));
    const fractions = working.map(progressFraction);
    const sorted = [...fractions].sort((a, b) => a - b);
    expect(fractions).toEqual(sorted);
    expect(progressFraction("done")).toBe(1);
  });

  it("builds a view model for every state", () => {
    for (const state of JOB_STATES) {
      const status: JobStatus = {
        job_id: "j1",
        state,
        stage_progress: [{ stage: "extract", duration_ms: 12 }],
        ...(state === "failed" ? { error: "stage asr: boom" } : {}),
        ...(state === "done"
          ? {
              result_links: {
                video: "/api/v1/jobs/j1/result/video",
                transcript: "/api/v1/jobs/j1/result/transcript",
                source: "/api/v1/jobs/j1/result/source",
              },
            }
          : {}),
      };
      const model = toViewModel(status);
      expect(["working", "done", "failed"]).toContain(model.phase);
      expect(model.completedStages).toEqual(["extract"]);
    }
  });
});

describe("polling backoff", () => {
  it("starts at two seconds and caps at ten", () => {
    expect(pollDelayMs(0)).toBe(2000);
    expect(pollDelayMs(1)).toBe(3000);
    const delays = Array.from({ length: 20 }, (_, i) => pollDelayMs(i));
    for (let i = 1; i < delays.length; i += 1) {
      expect(delays[i]!).toBeGreaterThanOrEqual(delays[i - 1]!);
      expect(delays[i]!).toBeLessThanOrEqual(10000);
    }
    expect(delays[delays.length - 1]).toBe(10000);
  });
});

describe("survey form", () => {
  it("starts incomplete", () => {
    expect(surveyComplete(emptySurvey())).toBe(false);
  });

  it("requires all three scores and a rater id", () => {
    const form = emptySurvey();
    form.rater_id = "r1";
    form.lip_sync = 4;
    form.translation_quality = 3;
    expect(surveyComplete(form)).toBe(false);
    form.audio_quality = 5;
    expect(surveyComplete(form)).toBe(true);
  });

  it("rejects out-of-range scores", () => {
    const form = emptySurvey();
    form.rater_id = "r1";
    form.lip_sync = 6;
    form.translation_quality = 3;
    form.audio_quality = 3;
    expect(surveyComplete(form)).toBe(false);
  });
});
