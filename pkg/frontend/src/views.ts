/** HTML renderers. Pure string builders so they are testable without a DOM. */

import { TARGET_LANGUAGES, VOICE_GENDERS } from "./api.js";
import type { JobViewModel, SurveyForm } from "./state.js";
import { surveyComplete } from "./state.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderUploadView(error?: { message: string; field?: string }): string {
  const languageOptions = Object.entries(TARGET_LANGUAGES)
    .map(([code, name]) => `<option value="${code}">${name}</option>`)
    .join("");
  const voiceOptions = VOICE_GENDERS.map(
    (gender) => `<option value="${gender}">${gender}</option>`,
  ).join("");
  const fieldError = (field: string) =>
    error && error.field === field
      ? `<p class="error" data-field="${field}">${escapeHtml(error.message)}</p>`
      : "";
  const generalError =
    error && !error.field ? `<p class="error">${escapeHtml(error.message)}</p>` : "";
  return `
    <section class="card">
      <h2>Dub a video</h2>
      ${generalError}
      <form id="upload-form">
        <label>Video file
          <input type="file" name="video" accept="video/*" required />
        </label>
        <button type="button" id="record-toggle">Record from camera</button>
        ${fieldError("video")}
        <label>Target language
          <select name="target_language">${languageOptions}</select>
        </label>
        ${fieldError("target_language")}
        <label>Voice model
          <select name="voice_gender">${voiceOptions}</select>
        </label>
        ${fieldError("voice_gender")}
        <button type="submit">Translate</button>
      </form>
    </section>`;
}

export function renderJobView(jobId: string, model: JobViewModel): string {
  if (model.phase === "failed") {
    return `
      <section class="card">
        <h2>Job ${escapeHtml(jobId)}</h2>
        <div class="banner error">Job failed: ${escapeHtml(model.error ?? "unknown error")}</div>
      </section>`;
  }
  if (model.phase === "done" && model.links) {
    return `
      <section class="card">
        <h2>Job ${escapeHtml(jobId)}</h2>
        <div class="players">
          <figure>
            <figcaption>Source</figcaption>
            <video id="player-source" controls src="${model.links.source}"></video>
          </figure>
          <figure>
            <figcaption>Dubbed</figcaption>
            <video id="player-dubbed" controls src="${model.links.video}"></video>
          </figure>
        </div>
        <p>
          <button type="button" id="play-both">Play both</button>
          <a href="${model.links.video}" download>Download video</a>
          <a href="${model.links.transcript}" download>Download transcript</a>
          <a href="${model.links.source}" download>Download source</a>
        </p>
        <div id="survey-slot"></div>
      </section>`;
  }
  const percent = Math.round(model.progress * 100);
  const stages = model.completedStages
    .map((stage) => `<li>${escapeHtml(stage)}</li>`)
    .join("");
  return `
    <section class="card">
      <h2>Job ${escapeHtml(jobId)}</h2>
      <p class="status">${escapeHtml(model.label)}…</p>
      <progress value="${percent}" max="100"></progress>
      <ol class="stages">${stages}</ol>
    </section>`;
}

export function renderSurveyForm(
  form: SurveyForm,
  outcome?: { kind: "ok" } | { kind: "error"; message: string },
): string {
  const scoreRow = (name: keyof SurveyForm, label: string) => {
    const current = form[name];
    const buttons = [1, 2, 3, 4, 5]
      .map(
        (score) =>
          `<label class="score"><input type="radio" name="${name}" value="${score}" ${
            current === score ? "checked" : ""
          }/>${score}</label>`,
      )
      .join("");
    return `<fieldset><legend>${label}</legend>${buttons}</fieldset>`;
  };
  const message =
    outcome === undefined
      ? ""
      : outcome.kind === "ok"
        ? `<p class="banner ok">Thanks, your rating was recorded.</p>`
        : `<p class="banner error">${escapeHtml(outcome.message)}</p>`;
  return `
    <form id="survey-form" class="card">
      <h3>Rate this translation</h3>
      ${message}
      <label>Your rater id
        <input type="text" name="rater_id" value="${escapeHtml(form.rater_id)}" />
      </label>
      ${scoreRow("lip_sync", "Lip synchronization")}
      ${scoreRow("translation_quality", "Translation quality")}
      ${scoreRow("audio_quality", "Audio quality")}
      <button type="submit" ${surveyComplete(form) ? "" : "disabled"}>Submit rating</button>
    </form>`;
}

export function renderNotFound(jobId: string): string {
  return `
    <section class="card">
      <h2>Not found</h2>
      <p>No job with id ${escapeHtml(jobId)}.</p>
      <p><a href="#/">Back to upload</a></p>
    </section>`;
}
