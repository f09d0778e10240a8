/** Browser wiring: hash router, polling loop, upload and survey handlers. */

import { ApiError, DubClient, type JobStatus } from "./api.js";
import {
  emptySurvey,
  isJobState,
  pollDelayMs,
  toViewModel,
  type SurveyForm,
} from "./state.js";
import {
  renderJobView,
  renderNotFound,
  renderSurveyForm,
  renderUploadView,
} from "./views.js";

const client = new DubClient("");
const root = document.getElementById("app") as HTMLElement;

let pollTimer: number | undefined;
let recordedFile: File | null = null;
let recorder: MediaRecorder | null = null;

function navigate(hash: string): void {
  window.location.hash = hash;
}

function route(): void {
  if (pollTimer !== undefined) {
    window.clearTimeout(pollTimer);
    pollTimer = undefined;
  }
  const hash = window.location.hash || "#/";
  const jobMatch = /^#\/jobs\/([A-Za-z0-9_-]+)$/.exec(hash);
  if (jobMatch && jobMatch[1]) {
    showJob(jobMatch[1]);
    return;
  }
  showUpload();
}

function showUpload(error?: { message: string; field?: string }): void {
  root.innerHTML = renderUploadView(error);
  recordedFile = null;
  const form = document.getElementById("upload-form") as HTMLFormElement;
  const fileInput = form.querySelector("input[name=video]") as HTMLInputElement;
  const recordButton = document.getElementById("record-toggle") as HTMLButtonElement;

  recordButton.addEventListener("click", () => toggleRecording(recordButton, fileInput));

  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const file = recordedFile ?? fileInput.files?.[0] ?? null;
    if (!file) {
      showUpload({ message: "Choose a video file or record one first.", field: "video" });
      return;
    }
    const language = (form.elements.namedItem("target_language") as HTMLSelectElement).value;
    const gender = (form.elements.namedItem("voice_gender") as HTMLSelectElement).value;
    try {
      const jobId = await client.createJob(file, file.name || "recording.webm", language, gender);
      navigate(`#/jobs/${jobId}`);
    } catch (err) {
      if (err instanceof ApiError) {
        showUpload({ message: err.message, field: err.field });
      } else {
        showUpload({ message: `Upload failed: ${String(err)}` });
      }
    }
  });
}

async function toggleRecording(
  button: HTMLButtonElement,
  fileInput: HTMLInputElement,
): Promise<void> {
  if (recorder) {
    recorder.stop();
    return;
  }
  if (!navigator.mediaDevices?.getUserMedia) {
    button.textContent = "Recording unsupported in this browser";
    button.disabled = true;
    return;
  }
  try {
    const stream = await navigator.mediaDevices.getUserMedia({ video: true, audio: true });
    const chunks: Blob[] = [];
    recorder = new MediaRecorder(stream);
    recorder.ondataavailable = (event) => chunks.push(event.data);
    recorder.onstop = () => {
      stream.getTracks().forEach((track) => track.stop());
      recordedFile = new File(chunks, "recording.webm", { type: "video/webm" });
      recorder = null;
      button.textContent = "Recorded ✓ (click to re-record)";
      fileInput.disabled = true;
    };
    recorder.start();
    button.textContent = "Stop recording";
  } catch (err) {
    button.textContent = `Recording failed: ${String(err)}`;
  }
}

function showJob(jobId: string): void {
  let attempt = 0;

  const tick = async () => {
    let status: JobStatus;
    try {
      status = await client.getJob(jobId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        root.innerHTML = renderNotFound(jobId);
        return;
      }
      pollTimer = window.setTimeout(tick, pollDelayMs(attempt++));
      return;
    }
    if (!isJobState(status.state)) {
      throw new Error(`service reported unknown state ${status.state}`);
    }
    const model = toViewModel(status);
    root.innerHTML = renderJobView(jobId, model);
    if (model.phase === "working") {
      pollTimer = window.setTimeout(tick, pollDelayMs(attempt++));
      return;
    }
    if (model.phase === "done") {
      wireResultView(jobId);
    }
  };
  void tick();
}

function wireResultView(jobId: string): void {
  const playBoth = document.getElementById("play-both");
  playBoth?.addEventListener("click", () => {
    const source = document.getElementById("player-source") as HTMLVideoElement | null;
    const dubbed = document.getElementById("player-dubbed") as HTMLVideoElement | null;
    if (source && dubbed) {
      source.currentTime = 0;
      dubbed.currentTime = 0;
      void source.play();
      void dubbed.play();
    }
  });
  mountSurvey(jobId, emptySurvey());
}

function mountSurvey(
  jobId: string,
  form: SurveyForm,
  outcome?: { kind: "ok" } | { kind: "error"; message: string },
): void {
  const slot = document.getElementById("survey-slot");
  if (!slot) return;
  slot.innerHTML = renderSurveyForm(form, outcome);
  const element = document.getElementById("survey-form") as HTMLFormElement;

  element.addEventListener("change", () => {
    const next = readSurvey(element);
    mountSurvey(jobId, next, undefined);
  });
  element.addEventListener("submit", async (event) => {
    event.preventDefault();
    const current = readSurvey(element);
    try {
      await client.postRating(jobId, {
        rater_id: current.rater_id,
        lip_sync: current.lip_sync ?? 0,
        translation_quality: current.translation_quality ?? 0,
        audio_quality: current.audio_quality ?? 0,
      });
      mountSurvey(jobId, current, { kind: "ok" });
    } catch (err) {
      const message =
        err instanceof ApiError && err.status === 409
          ? "You already rated this video; thanks!"
          : err instanceof ApiError
            ? err.message
            : String(err);
      mountSurvey(jobId, current, { kind: "error", message });
    }
  });
}

function readSurvey(element: HTMLFormElement): SurveyForm {
  const score = (name: string): number | null => {
    const checked = element.querySelector<HTMLInputElement>(`input[name=${name}]:checked`);
    return checked ? Number(checked.value) : null;
  };
  return {
    rater_id: (element.elements.namedItem("rater_id") as HTMLInputElement).value,
    lip_sync: score("lip_sync"),
    translation_quality: score("translation_quality"),
    audio_quality: score("audio_quality"),
  };
}

window.addEventListener("hashchange", route);
window.addEventListener("load", route);
