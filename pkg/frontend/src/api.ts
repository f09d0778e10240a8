/** Typed client for the dubbing service's /api/v1 endpoints. */

export const JOB_STATES = [
  "queued",
  "extracting",
  "segmenting",
  "transcribing",
  "translating",
  "synthesizing",
  "refining",
  "lipsync",
  "muxing",
  "done",
  "failed",
] as const;

export type JobState = (typeof JOB_STATES)[number];

export const TARGET_LANGUAGES: Record<string, string> = {
  bn: "Bengali",
  hi: "Hindi",
  ne: "Nepali",
  te: "Telugu",
};

export const VOICE_GENDERS = ["male", "female"] as const;

export interface StageProgress {
  stage: string;
  duration_ms: number;
}

export interface ResultLinks {
  video: string;
  transcript: string;
  source: string;
}

export interface JobStatus {
  job_id: string;
  state: JobState;
  stage_progress: StageProgress[];
  error?: string;
  result_links?: ResultLinks;
}

export interface TranscriptEntry {
  index: number;
  start_s: number;
  end_s: number;
  source_text: string;
  target_text: string;
}

export interface RatingPayload {
  rater_id: string;
  lip_sync: number;
  translation_quality: number;
  audio_quality: number;
}

export interface AgreementSlice {
  cohen_avg: number | null;
  fleiss: number | null;
  pearson_avg: number | null;
}

export interface AgreementReport {
  languages: Record<string, Record<string, AgreementSlice>>;
  warnings: string[];
}

/** Error carrying the HTTP status plus the service's error body. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
    public readonly field?: string,
  ) {
    super(message);
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let message = `HTTP ${response.status}`;
  let field: string | undefined;
  try {
    const body = (await response.json()) as { error?: string; field?: string };
    if (body.error) message = body.error;
    field = body.field;
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(response.status, message, field);
}

export class DubClient {
  constructor(private readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}/api/v1${path}`;
  }

  async health(): Promise<boolean> {
    try {
      const response = await fetch(this.url("/health"));
      return response.ok;
    } catch {
      return false;
    }
  }

  /** Upload a video; resolves to the new job id. */
  async createJob(
    video: Blob,
    filename: string,
    targetLanguage: string,
    voiceGender: string,
  ): Promise<string> {
    const form = new FormData();
    form.append("video", video, filename);
    form.append("target_language", targetLanguage);
    form.append("voice_gender", voiceGender);
    const response = await fetch(this.url("/jobs"), { method: "POST", body: form });
    await raiseForStatus(response);
    const body = (await response.json()) as { job_id: string };
    return body.job_id;
  }

  async getJob(jobId: string): Promise<JobStatus> {
    const response = await fetch(this.url(`/jobs/${encodeURIComponent(jobId)}`));
    await raiseForStatus(response);
    return (await response.json()) as JobStatus;
  }

  resultUrl(jobId: string, artifact: keyof ResultLinks): string {
    return this.url(`/jobs/${encodeURIComponent(jobId)}/result/${artifact}`);
  }

  async getTranscript(jobId: string): Promise<TranscriptEntry[]> {
    const response = await fetch(this.resultUrl(jobId, "transcript"));
    await raiseForStatus(response);
    return (await response.json()) as TranscriptEntry[];
  }

  async postRating(jobId: string, payload: RatingPayload): Promise<void> {
    const response = await fetch(
      this.url(`/jobs/${encodeURIComponent(jobId)}/ratings`),
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      },
    );
    await raiseForStatus(response);
  }

  async getAgreement(language?: string, criterion?: string): Promise<AgreementReport> {
    const params = new URLSearchParams();
    if (language) params.set("language", language);
    if (criterion) params.set("criterion", criterion);
    const query = params.toString();
    const response = await fetch(this.url(`/agreement${query ? `?${query}` : ""}`));
    await raiseForStatus(response);
    return (await response.json()) as AgreementReport;
  }
}
