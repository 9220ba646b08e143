/** Trailing-edge debouncer: a burst of schedule() calls runs the last
 * callback once, `delayMs` after the burst ends. */
export class Debouncer {
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(readonly delayMs: number) {}

  schedule(fn: () => void): void {
    this.cancel();
    this.timer = setTimeout(() => {
      this.timer = null;
      fn();
    }, this.delayMs);
  }

  cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  get pending(): boolean {
    return this.timer !== null;
  }
}

/** Orders in-flight async work: only the most recently issued ticket is
 * accepted, so a slow stale response can never overwrite a newer one. */
export class LatestGuard {
  private current = 0;

  issue(): number {
    return ++this.current;
  }

  accepts(ticket: number): boolean {
    return ticket === this.current;
  }
}
