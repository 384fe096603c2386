/** Interval helpers for keeping panels in sync with the server. */

export interface Poller {
  stop(): void;
}

/**
 * Run `tick` immediately and then every `intervalMs` until stopped.
 * Overlapping runs are skipped; a tick that throws does not kill the loop.
 */
export function startPolling(
  tick: () => Promise<void> | void,
  intervalMs: number,
  onError: (error: unknown) => void = () => {},
): Poller {
  let busy = false;
  const run = async () => {
    if (busy) {
      return;
    }
    busy = true;
    try {
      await tick();
    } catch (error) {
      onError(error);
    } finally {
      busy = false;
    }
  };
  void run();
  const interval = setInterval(run, intervalMs);
  return {
    stop: () => clearInterval(interval),
  };
}

/**
 * Poll `probe` until it returns a non-null value; reject after `timeoutMs`.
 * Used to wait for background hint generation to deliver.
 */
export function waitFor<T>(
  probe: () => Promise<T | null>,
  intervalMs: number,
  timeoutMs: number,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  return new Promise((resolve, reject) => {
    const attempt = async () => {
      try {
        const value = await probe();
        if (value !== null) {
          clearInterval(interval);
          resolve(value);
          return;
        }
        if (Date.now() >= deadline) {
          clearInterval(interval);
          reject(new Error(`timed out after ${timeoutMs} ms`));
        }
      } catch (error) {
        clearInterval(interval);
        reject(error);
      }
    };
    const interval = setInterval(attempt, intervalMs);
    void attempt();
  });
}
