import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { mkdtemp, readFile, readdir } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { createInterface } from "node:readline";
import { afterEach, describe, expect, it } from "vitest";

const ROOT = fileURLToPath(new URL("..", import.meta.url));
const SERVER = join(ROOT, "dist", "server.js");
const TRANSCRIPT = join(ROOT, "..", "tests", "data", "golden_transcript.json");
const FIXTURES = join(ROOT, "test", "fixtures");

class ServerHandle {
  proc: ChildProcessWithoutNullStreams;
  private lines: string[] = [];
  private waiters: Array<(line: string) => void> = [];
  private exited: Promise<number | null>;

  constructor(args: string[]) {
    this.proc = spawn("node", [SERVER, ...args], { stdio: "pipe" });
    const rl = createInterface({ input: this.proc.stdout });
    rl.on("line", (line) => {
      const waiter = this.waiters.shift();
      if (waiter) waiter(line);
      else this.lines.push(line);
    });
    this.exited = new Promise((resolvePromise) => {
      this.proc.on("exit", (code) => resolvePromise(code));
    });
  }

  send(message: unknown): void {
    this.proc.stdin.write(JSON.stringify(message) + "\n");
  }

  sendRaw(line: string): void {
    this.proc.stdin.write(line + "\n");
  }

  async nextLine(timeoutMs = 10_000): Promise<string> {
    const buffered = this.lines.shift();
    if (buffered !== undefined) return buffered;
    return new Promise((resolvePromise, reject) => {
      const timer = setTimeout(
        () => reject(new Error("timed out waiting for a server line")),
        timeoutMs,
      );
      this.waiters.push((line) => {
        clearTimeout(timer);
        resolvePromise(line);
      });
    });
  }

  async next(): Promise<Record<string, unknown>> {
    return JSON.parse(await this.nextLine());
  }

  async exitCode(): Promise<number | null> {
    return this.exited;
  }

  kill(): void {
    this.proc.kill();
  }
}

let server: ServerHandle | null = null;

function start(...args: string[]): ServerHandle {
  server = new ServerHandle(args);
  return server;
}

afterEach(() => {
  server?.kill();
  server = null;
});

describe("golden transcript", () => {
  it("mock mode conforms byte for byte", async () => {
    const transcript = JSON.parse(await readFile(TRANSCRIPT, "utf8"));
    const s = start("--mock", "--dim", String(transcript.dimension));
    for (const step of transcript.steps) {
      if (step.type === "handshake") {
        const handshake = await s.next();
        for (const [key, value] of Object.entries(step.expect)) {
          expect(handshake[key], `handshake key ${key}`).toEqual(value);
        }
      } else if (step.type === "request") {
        s.send(step.send);
        const response = await s.next();
        if (step.expect_error) {
          expect(response.id).toEqual(step.expect_error.id);
          expect(String(response.error)).toContain(
            step.expect_error.message_contains,
          );
          expect(response.score).toBeUndefined();
        } else {
          expect(response).toEqual(step.expect);
        }
      } else if (step.type === "shutdown") {
        s.send(step.send);
        expect(await s.exitCode()).toBe(0);
      } else {
        throw new Error(`unknown step type ${step.type}`);
      }
    }
  }, 20_000);
});

describe("mock mode", () => {
  it("scores the first coordinate exactly", async () => {
    const s = start("--mock", "--dim", "4");
    await s.next();
    s.send({ id: 7, z: [0.1, 2.5, -3.25, 8.0] });
    expect(await s.next()).toEqual({ id: 7, score: 0.1 });
    s.send({ id: 8, z: [-0.0078125, 0, 0, 0] });
    expect(await s.next()).toEqual({ id: 8, score: -0.0078125 });
  });

  it("announces dimension and determinism in the handshake", async () => {
    const s = start("--mock", "--dim", "8");
    const handshake = await s.next();
    expect(handshake.protocol).toBe("evolgan-obj/1");
    expect(handshake.d).toBe(8);
    expect(handshake.deterministic).toBe(true);
    expect(typeof handshake.preprocess).toBe("string");
  });

  it("rejects wrong-length vectors with the request id", async () => {
    const s = start("--mock", "--dim", "4");
    await s.next();
    s.send({ id: 41, z: [1, 2, 3] });
    const response = await s.next();
    expect(response.id).toBe(41);
    expect(String(response.error)).toContain("dimension");
  });

  it("rejects non-numeric vectors but keeps serving", async () => {
    const s = start("--mock", "--dim", "2");
    await s.next();
    s.send({ id: 1, z: [1, "two"] });
    expect(String((await s.next()).error)).toContain("finite");
    s.send({ id: 2, z: [0.5, 1] });
    expect(await s.next()).toEqual({ id: 2, score: 0.5 });
  });

  it("answers malformed lines with id null and keeps serving", async () => {
    const s = start("--mock", "--dim", "2");
    await s.next();
    s.sendRaw("{not json");
    const response = await s.next();
    expect(response.id).toBeNull();
    expect(String(response.error)).toContain("malformed");
    s.send({ id: 3, z: [1.5, 0] });
    expect(await s.next()).toEqual({ id: 3, score: 1.5 });
  });

  it("rejects unknown commands and requests without an id", async () => {
    const s = start("--mock", "--dim", "2");
    await s.next();
    s.send({ id: 5, cmd: "reload" });
    expect(String((await s.next()).error)).toContain("unknown command");
    s.send({ z: [1, 2] });
    expect((await s.next()).id).toBeNull();
  });

  it("exits cleanly on shutdown", async () => {
    const s = start("--mock", "--dim", "2");
    await s.next();
    s.send({ id: null, cmd: "shutdown" });
    expect(await s.exitCode()).toBe(0);
  });
});

describe("module loading", () => {
  const moduleArgs = [
    "--generator", join(FIXTURES, "identity-generator.mjs"),
    "--scorer", join(FIXTURES, "sum-scorer.mjs"),
    "--dim", "3",
  ];

  it("serves a generator/scorer module pair", async () => {
    const s = start(...moduleArgs);
    const handshake = await s.next();
    expect(handshake.d).toBe(3);
    expect(handshake.preprocess).toBe("sum over raw coordinates");
    s.send({ id: 1, z: [1.5, 2.0, -0.5] });
    expect(await s.next()).toEqual({ id: 1, score: 3.0 });
  });

  it("sends an error then exits cleanly on an unrecoverable model failure", async () => {
    const s = start(...moduleArgs);
    await s.next();
    s.send({ id: 9, z: [999, 0, 0] });
    const response = await s.next();
    expect(response.id).toBe(9);
    expect(String(response.error)).toContain("inference backend lost");
    expect(await s.exitCode()).toBe(0);
  });

  it("fails fast when no model is configured", async () => {
    const s = start("--dim", "3");
    expect(await s.exitCode()).toBe(1);
  });
});

describe("artifact persistence", () => {
  it("saves one artifact per request id", async () => {
    const dir = await mkdtemp(join(tmpdir(), "bridge-artifacts-"));
    const s = start("--mock", "--dim", "2", "--images-out", dir);
    await s.next();
    s.send({ id: 11, z: [0.25, -4.0] });
    await s.next();
    s.send({ id: 12, z: [1.0, 2.0] });
    await s.next();
    s.send({ id: null, cmd: "shutdown" });
    await s.exitCode();

    expect((await readdir(dir)).sort()).toEqual(["11.json", "12.json"]);
    expect(JSON.parse(await readFile(join(dir, "11.json"), "utf8"))).toEqual([
      0.25, -4.0,
    ]);
  });
});
