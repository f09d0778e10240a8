/**
 * Integration tests against the real Python service with mock backends.
 * Spawns `scripts/serve.py` with stub media tools in a temp directory.
 */
import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, DubClient, JOB_STATES, type JobState } from "../src/api.js";
import { isTerminal } from "../src/state.js";

const PYTHON = process.env.PYTHON ?? "python3";
const HERE = fileURLToPath(new URL(".", import.meta.url));
const REPO_ROOT = resolve(HERE, "..", "..");
const PORT = 18600 + (process.pid % 200);
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;
let client: DubClient;
const serviceLog: string[] = [];

const SYNTH_EXTRACTOR = `
import math, struct, sys, wave
sr = 16000
samples = [0.0] * sr
samples += [0.5 * math.sin(2 * math.pi * 440 * i / sr) for i in range(sr)]
samples += [0.0] * sr
with wave.open(sys.argv[2], "wb") as w:
    w.setnchannels(1)
    w.setsampwidth(2)
    w.setframerate(sr)
    w.writeframes(b"".join(
        struct.pack("<h", max(-32768, min(32767, round(s * 32768))))
        for s in samples))
`;

const STUB_MUXER = `
import sys
with open(sys.argv[3], "wb") as out:
    out.write(b"MUXED")
    out.write(open(sys.argv[1], "rb").read())
    out.write(open(sys.argv[2], "rb").read())
`;

async function waitForHealth(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (await client.health()) return;
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error(
    `service did not become healthy on ${BASE}\n${serviceLog.join("")}`,
  );
}

async function waitForTerminal(jobId: string, timeoutMs = 90000): Promise<JobState[]> {
  const seen: JobState[] = [];
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    const status = await client.getJob(jobId);
    if (seen[seen.length - 1] !== status.state) seen.push(status.state);
    if (isTerminal(status.state)) return seen;
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error(`job ${jobId} never finished; states: ${seen.join(" -> ")}`);
}

function uploadBlob(): Blob {
  return new Blob([new Uint8Array(2048).fill(7)], { type: "video/mp4" });
}

beforeAll(async () => {
  const workDir = mkdtempSync(join(tmpdir(), "dubpipe-web-test-"));
  const extractor = join(workDir, "stub_extract.py");
  const muxer = join(workDir, "stub_mux.py");
  writeFileSync(extractor, SYNTH_EXTRACTOR);
  writeFileSync(muxer, STUB_MUXER);

  service = spawn(
    PYTHON,
    [
      join(REPO_ROOT, "scripts", "serve.py"),
      "--host", "127.0.0.1",
      "--port", String(PORT),
      "--data-dir", join(workDir, "data"),
      "--workers", "2",
      "--extractor-cmd", `${PYTHON} ${extractor} {in} {out}`,
      "--muxer-cmd", `${PYTHON} ${muxer} {in} {audio} {out}`,
    ],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  service.stdout?.on("data", (chunk) => serviceLog.push(String(chunk)));
  service.stderr?.on("data", (chunk) => serviceLog.push(String(chunk)));

  client = new DubClient(BASE);
  await waitForHealth(30000);
}, 45000);

afterAll(() => {
  service?.kill("SIGTERM");
});

describe("upload contract", () => {
  it("submits the exact multipart schema and gets a job id", async () => {
    const jobId = await client.createJob(uploadBlob(), "clip.mp4", "hi", "female");
    expect(jobId).toMatch(/^[0-9a-f]+$/);
    const states = await waitForTerminal(jobId);
    expect(states[states.length - 1]).toBe("done");
  }, 120000);

  it("rejects an unsupported language with a field-scoped 400", async () => {
    await expect(
      client.createJob(uploadBlob(), "clip.mp4", "fr", "female"),
    ).rejects.toSatisfy((err: unknown) => {
      return err instanceof ApiError && err.status === 400 && err.field === "target_language";
    });
  });

  it("rejects an unsupported voice gender with 400", async () => {
    await expect(
      client.createJob(uploadBlob(), "clip.mp4", "hi", "robot"),
    ).rejects.toSatisfy((err: unknown) => err instanceof ApiError && (err as ApiError).status === 400);
  });
});

describe("job view contract", () => {
  it("observes states in declared order and exposes working result links", async () => {
    const jobId = await client.createJob(uploadBlob(), "clip.mp4", "bn", "male");
    const states = await waitForTerminal(jobId);
    const order = states.map((s) => JOB_STATES.indexOf(s));
    expect([...order].sort((a, b) => a - b)).toEqual(order);

    const status = await client.getJob(jobId);
    expect(status.state).toBe("done");
    expect(status.result_links).toBeDefined();

    const video = await fetch(`${BASE}${status.result_links!.video}`);
    expect(video.status).toBe(200);

    const transcript = await client.getTranscript(jobId);
    expect(transcript.length).toBeGreaterThan(0);
    expect(transcript[0]).toHaveProperty("source_text");
    expect(transcript[0]).toHaveProperty("target_text");
  }, 120000);

  it("404s for an unknown job id", async () => {
    await expect(client.getJob("doesnotexist")).rejects.toSatisfy(
      (err: unknown) => err instanceof ApiError && (err as ApiError).status === 404,
    );
  });
});

describe("survey contract", () => {
  it("posts valid 1-5 payloads and surfaces 409 on duplicates and 422 on bad scores", async () => {
    const jobId = await client.createJob(uploadBlob(), "clip.mp4", "te", "female");
    await waitForTerminal(jobId);

    const payload = {
      rater_id: "web-tester",
      lip_sync: 4,
      translation_quality: 3,
      audio_quality: 5,
    };
    await client.postRating(jobId, payload);

    await expect(client.postRating(jobId, payload)).rejects.toSatisfy(
      (err: unknown) => err instanceof ApiError && (err as ApiError).status === 409,
    );

    await expect(
      client.postRating(jobId, { ...payload, rater_id: "other", lip_sync: 6 }),
    ).rejects.toSatisfy(
      (err: unknown) => err instanceof ApiError && (err as ApiError).status === 422,
    );
  }, 120000);

  it("feeds the agreement endpoint", async () => {
    const jobId = await client.createJob(uploadBlob(), "clip.mp4", "ne", "male");
    await waitForTerminal(jobId);
    for (const rater of ["agree-1", "agree-2"]) {
      await client.postRating(jobId, {
        rater_id: rater,
        lip_sync: 4,
        translation_quality: 4,
        audio_quality: 4,
      });
    }
    const report = await client.getAgreement("ne");
    expect(report.languages).toHaveProperty("ne");
  }, 120000);
});
