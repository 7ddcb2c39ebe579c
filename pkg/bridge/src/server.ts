/**
 * Objective server over stdin/stdout, newline-delimited JSON.
 *
 * Wraps a generator (latent vector -> artifact) and a scorer
 * (artifact -> number) into one black-box objective:
 *
 *   Server sends on startup:
 *     { "protocol": "evolgan-obj/1", "d": <dim>,
 *       "deterministic": <bool>, "preprocess": <string> }
 *   Client sends: { "id": <n>, "z": [<d numbers>] }
 *   Server sends: { "id": <n>, "score": <number> }
 *             or  { "id": <n>, "error": "<message>" }
 *   Client sends: { "id": null, "cmd": "shutdown" }
 *   Server exits with code 0.
 *
 * Requests are handled one at a time, in order.  A malformed line gets
 * { "id": null, "error": ... } and the server keeps serving; an error
 * marked unrecoverable by the model gets an error response followed by
 * a clean exit.
 *
 * --mock wires an identity generator to a first-coordinate scorer
 * (score = z[0]), needs no weights, and is what automated tests run.
 * Real models are plugged in as ES modules via --generator/--scorer;
 * see the README for the factory contract.
 */

import { mkdir, writeFile } from "node:fs/promises";
import { join, resolve } from "node:path";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";
import { createInterface } from "node:readline";

const PROTOCOL = "evolgan-obj/1";

export interface Generator {
  dimension: number;
  generate(z: number[]): unknown;
}

export interface Scorer {
  score(artifact: unknown): number;
  /** How artifacts are transformed before scoring; surfaced in the handshake. */
  preprocess?: string;
  /** Neural inference is rarely bit-stable across devices; default false. */
  deterministic?: boolean;
}

interface BridgeConfig {
  generator: Generator;
  scorer: Scorer;
  imagesOut: string | null;
  deterministic: boolean;
}

function mockGenerator(dimension: number): Generator {
  return { dimension, generate: (z) => z };
}

function mockScorer(): Scorer {
  return {
    score: (artifact) => (artifact as number[])[0],
    preprocess: "none",
    deterministic: true,
  };
}

async function loadModule<T>(path: string, options: Record<string, unknown>): Promise<T> {
  const mod = await import(pathToFileURL(resolve(path)).href);
  if (typeof mod.create !== "function") {
    throw new Error(`${path} does not export a create() factory`);
  }
  return mod.create(options) as T;
}

function emit(message: Record<string, unknown>): void {
  process.stdout.write(JSON.stringify(message) + "\n");
}

function isUnrecoverable(err: unknown): boolean {
  return typeof err === "object" && err !== null &&
    (err as { unrecoverable?: boolean }).unrecoverable === true;
}

function errorMessage(err: unknown): string {
  if (err instanceof Error) return err.message;
  if (typeof err === "object" && err !== null && "message" in err) {
    return String((err as { message: unknown }).message);
  }
  return String(err);
}

/** Validate one request and return the score, or throw with a client-facing message. */
function evaluate(config: BridgeConfig, z: unknown): { score: number; artifact: unknown } {
  if (!Array.isArray(z) || !z.every((v) => typeof v === "number" && Number.isFinite(v))) {
    throw new Error("z must be an array of finite numbers");
  }
  const d = config.generator.dimension;
  if (z.length !== d) {
    throw new Error(`dimension mismatch: got ${z.length}, expected ${d}`);
  }
  const artifact = config.generator.generate(z as number[]);
  const score = config.scorer.score(artifact);
  if (typeof score !== "number" || !Number.isFinite(score)) {
    throw new Error(`scorer returned a non-finite value: ${score}`);
  }
  return { score, artifact };
}

async function persistArtifact(dir: string, id: number, artifact: unknown): Promise<void> {
  if (artifact instanceof Uint8Array) {
    await writeFile(join(dir, `${id}.bin`), artifact);
  } else {
    await writeFile(join(dir, `${id}.json`), JSON.stringify(artifact) + "\n");
  }
}

async function buildConfig(): Promise<BridgeConfig> {
  const { values } = parseArgs({
    options: {
      mock: { type: "boolean", default: false },
      dim: { type: "string" },
      generator: { type: "string" },
      scorer: { type: "string" },
      "images-out": { type: "string" },
      device: { type: "string", default: "cpu" },
      deterministic: { type: "boolean", default: false },
    },
  });

  const dim = values.dim === undefined ? 256 : Number(values.dim);
  if (!Number.isInteger(dim) || dim < 1) {
    throw new Error(`--dim must be a positive integer, got ${values.dim}`);
  }

  let generator: Generator;
  let scorer: Scorer;
  if (values.mock) {
    generator = mockGenerator(dim);
    scorer = mockScorer();
  } else {
    if (!values.generator || !values.scorer) {
      throw new Error("--generator and --scorer are required without --mock");
    }
    const options = { device: values.device, dim };
    generator = await loadModule<Generator>(values.generator, options);
    scorer = await loadModule<Scorer>(values.scorer, options);
    if (!Number.isInteger(generator.dimension) || generator.dimension < 1) {
      throw new Error(`generator reports invalid dimension ${generator.dimension}`);
    }
  }

  const imagesOut = values["images-out"] ?? null;
  if (imagesOut !== null) {
    await mkdir(imagesOut, { recursive: true });
  }
  return {
    generator,
    scorer,
    imagesOut,
    deterministic: values.deterministic || scorer.deterministic === true,
  };
}

async function serve(config: BridgeConfig): Promise<void> {
  emit({
    protocol: PROTOCOL,
    d: config.generator.dimension,
    deterministic: config.deterministic,
    preprocess: config.scorer.preprocess ?? "none",
  });

  const rl = createInterface({ input: process.stdin });
  for await (const line of rl) {
    if (line.trim() === "") continue;

    let msg: Record<string, unknown>;
    try {
      msg = JSON.parse(line);
    } catch (err) {
      emit({ id: null, error: `malformed request: ${errorMessage(err)}` });
      continue;
    }

    if (msg.cmd === "shutdown") {
      // let the event loop drain naturally; exit code 0
      rl.close();
      return;
    }

    const id = typeof msg.id === "number" ? msg.id : null;
    if (id === null) {
      emit({ id: null, error: "request needs a numeric id" });
      continue;
    }
    if ("cmd" in msg) {
      emit({ id, error: `unknown command: ${String(msg.cmd)}` });
      continue;
    }

    try {
      const { score, artifact } = evaluate(config, msg.z);
      if (config.imagesOut !== null) {
        await persistArtifact(config.imagesOut, id, artifact);
      }
      emit({ id, score });
    } catch (err) {
      emit({ id, error: errorMessage(err) });
      if (isUnrecoverable(err)) {
        rl.close();
        return;
      }
    }
  }
}

async function main(): Promise<void> {
  const config = await buildConfig();
  await serve(config);
}

main().catch((err) => {
  process.stderr.write(`[objective-bridge] Fatal: ${errorMessage(err)}\n`);
  process.exit(1);
});
