import { spawn, execFile, ChildProcess } from "node:child_process";
import { promisify } from "node:util";

const execFileP = promisify(execFile);
const PKG_ROOT = new URL("../..", import.meta.url).pathname;

export interface ServiceHandle {
  base: string;
  stop: () => void;
}

export async function startService(port = 8765): Promise<ServiceHandle> {
  const code =
    "from gdnn.service import create_app; import uvicorn; " +
    `uvicorn.run(create_app(), host='127.0.0.1', port=${port}, log_level='warning')`;
  const proc: ChildProcess = spawn("python3", ["-c", code], {
    cwd: PKG_ROOT,
    stdio: ["ignore", "pipe", "pipe"],
  });
  const base = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 60_000;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${base}/api/groups`);
      if (res.ok) {
        return { base, stop: () => proc.kill() };
      }
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  proc.kill();
  throw new Error("service did not come up");
}

/** The command-line spec for a benchmark architecture, raw bytes. */
export async function cliPresetSpec(group: string, preset: string): Promise<string> {
  const { stdout } = await execFileP(
    "python3",
    ["-m", "gdnn.cli", "build", "--group", group, "--preset", preset],
    { cwd: PKG_ROOT, maxBuffer: 10 * 1024 * 1024 }
  );
  return stdout;
}

/** Pair id scheme shared with the server: member lists joined by dashes. */
export function pairId(H: number[], K: number[]): string {
  return `${H.join("-")}_${K.join("-")}`;
}
