import { describe, expect, it } from "vitest";

import { JOB_STATES, type JobStatus } from "../src/api.js";
import { emptySurvey, toViewModel } from "../src/state.js";
import { renderJobView, renderSurveyForm, renderUploadView } from "../src/views.js";

function statusFor(state: (typeof JOB_STATES)[number]): JobStatus {
  return {
    job_id: "j1",
    state,
    stage_progress: [],
    ...(state === "failed" ? { error: "stage tts: synth exploded" } : {}),
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
}

describe("upload view", () => {
  it("offers the four target languages and both voices", () => {
    const html = renderUploadView();
    for (const name of ["Bengali", "Hindi", "Nepali", "Telugu"]) {
      expect(html).toContain(name);
    }
    expect(html).toContain('value="male"');
    expect(html).toContain('value="female"');
    expect(html).toContain('type="file"');
  });

  it("renders a field-scoped error inline", () => {
    const html = renderUploadView({ message: "too large", field: "video" });
    expect(html).toContain('data-field="video"');
    expect(html).toContain("too large");
  });
});

describe("job view", () => {
  it("renders every declared state without throwing", () => {
    for (const state of JOB_STATES) {
      const html = renderJobView("j1", toViewModel(statusFor(state)));
      expect(html.length).toBeGreaterThan(0);
    }
  });

  it("working states show a progress indicator", () => {
    const html = renderJobView("j1", toViewModel(statusFor("refining")));
    expect(html).toContain("<progress");
    expect(html).toContain("Matching timing and voice");
  });

  it("done state shows side-by-side players and download links", () => {
    const html = renderJobView("j1", toViewModel(statusFor("done")));
    expect(html).toContain('id="player-source"');
    expect(html).toContain('id="player-dubbed"');
    expect(html).toContain("/api/v1/jobs/j1/result/video");
    expect(html).toContain("/api/v1/jobs/j1/result/transcript");
    expect(html).toContain("download");
  });

  it("failed state names the failing stage", () => {
    const html = renderJobView("j1", toViewModel(statusFor("failed")));
    expect(html).toContain("Job failed");
    expect(html).toContain("stage tts");
  });

  it("escapes error text", () => {
    const status = statusFor("failed");
    status.error = "<script>alert(1)</script>";
    const html = renderJobView("j1", toViewModel(status));
    expect(html).not.toContain("<script>alert");
  });
});

describe("survey form", () => {
  it("submit is disabled until the form is complete", () => {
    const incomplete = renderSurveyForm(emptySurvey());
    expect(incomplete).toContain("disabled");

    const form = emptySurvey();
    form.rater_id = "r1";
    form.lip_sync = 3;
    form.translation_quality = 4;
    form.audio_quality = 5;
    const complete = renderSurveyForm(form);
    expect(complete).not.toContain("disabled");
    expect(complete).toContain('value="3" checked');
  });

  it("shows service rejections inline", () => {
    const html = renderSurveyForm(emptySurvey(), {
      kind: "error",
      message: "rater r1 already rated this job",
    });
    expect(html).toContain("already rated");
  });
});
