import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Debouncer, LatestGuard } from "../src/debounce.js";

describe("Debouncer", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("collapses a burst of schedules into one trailing call", () => {
    const debouncer = new Debouncer(300);
    const seen: string[] = [];
    debouncer.schedule(() => seen.push("a"));
    vi.advanceTimersByTime(100);
    debouncer.schedule(() => seen.push("b"));
    vi.advanceTimersByTime(100);
    debouncer.schedule(() => seen.push("c"));
    expect(seen).toEqual([]);
    vi.advanceTimersByTime(299);
    expect(seen).toEqual([]);
    vi.advanceTimersByTime(1);
    expect(seen).toEqual(["c"]);
    vi.advanceTimersByTime(1000);
    expect(seen).toEqual(["c"]);
  });

  it("cancel drops the pending call", () => {
    const debouncer = new Debouncer(300);
    const fn = vi.fn();
    debouncer.schedule(fn);
    expect(debouncer.pending).toBe(true);
    debouncer.cancel();
    expect(debouncer.pending).toBe(false);
    vi.advanceTimersByTime(1000);
    expect(fn).not.toHaveBeenCalled();
  });

  it("reports pending only while a call is scheduled", () => {
    const debouncer = new Debouncer(50);
    expect(debouncer.pending).toBe(false);
    debouncer.schedule(() => undefined);
    expect(debouncer.pending).toBe(true);
    vi.advanceTimersByTime(50);
    expect(debouncer.pending).toBe(false);
  });
});

describe("LatestGuard", () => {
  it("accepts only the most recently issued ticket", () => {
    const guard = new LatestGuard();
    const first = guard.issue();
    const second = guard.issue();
    expect(guard.accepts(first)).toBe(false);
    expect(guard.accepts(second)).toBe(true);
    const third = guard.issue();
    expect(guard.accepts(second)).toBe(false);
    expect(guard.accepts(third)).toBe(true);
  });
});
