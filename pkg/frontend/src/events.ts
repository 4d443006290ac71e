// Fire-and-forget interaction event reporting with a bounded retry queue.
// Gestures must never block on the network: enqueue() returns immediately,
// flush() ships what it can and re-queues the rest a limited number of
// times before dropping.

import type { EventKind, InteractionEvent } from "./types.js";

export const BATCH_LIMIT = 500; // gateway caps batches at 1000; stay well under

export interface QueueOptions {
  maxQueued?: number;   // oldest events drop beyond this
  maxAttempts?: number; // per-batch delivery attempts before dropping
  flushMs?: number;     // 0 disables the timer (tests flush by hand)
}

type PostFn = (events: InteractionEvent[]) => Promise<void>;

interface Pending {
  event: InteractionEvent;
  attempts: number;
}

export class EventQueue {
  readonly sessionId: string;
  private readonly post: PostFn;
  private readonly maxQueued: number;
  private readonly maxAttempts: number;
  private queue: Pending[] = [];
  private seq = 0;
  private inFlight = false;
  private timer: ReturnType<typeof setInterval> | null = null;
  dropped = 0;

  constructor(sessionId: string, post: PostFn, opts: QueueOptions = {}) {
    this.sessionId = sessionId;
    this.post = post;
    this.maxQueued = opts.maxQueued ?? 2000;
    this.maxAttempts = opts.maxAttempts ?? 5;
    const flushMs = opts.flushMs ?? 3000;
    if (flushMs > 0) {
      this.timer = setInterval(() => void this.flush(), flushMs);
    }
  }

  emit(kind: EventKind, fields: Partial<InteractionEvent> = {}): InteractionEvent {
    const event: InteractionEvent = {
      event_id: `${this.sessionId}-${String(this.seq++).padStart(6, "0")}`,
      session_id: this.sessionId,
      timestamp: Date.now(),
      kind,
      client: "viewer",
      ...fields,
    };
    this.queue.push({ event, attempts: 0 });
    if (this.queue.length > this.maxQueued) {
      this.queue.splice(0, this.queue.length - this.maxQueued);
      this.dropped += 1;
    }
    return event;
  }

  get pending(): number {
    return this.queue.length;
  }

  /** Ship queued events in order; failed batches retry up to maxAttempts. */
  async flush(): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    try {
      while (this.queue.length > 0) {
        const batch = this.queue.slice(0, BATCH_LIMIT);
        try {
          await this.post(batch.map((p) => p.event));
        } catch {
          let droppedAny = false;
          for (const p of batch) {
            p.attempts += 1;
            if (p.attempts >= this.maxAttempts) droppedAny = true;
          }
          const keep = batch.filter((p) => p.attempts < this.maxAttempts);
          this.dropped += batch.length - keep.length;
          this.queue = [...keep, ...this.queue.slice(batch.length)];
          if (!droppedAny) return; // back off, retry on the next flush
          continue;
        }
        this.queue = this.queue.slice(batch.length);
      }
    } finally {
      this.inFlight = false;
    }
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }
}
