import type { Verdict, VerdictCacheEntry } from './types.js'

/** Canonical cache key: lowercase scheme/host, default ports and fragments
 * dropped. Throws on unparseable input. */
export function normalizeUrl(raw: string): string {
  const url = new URL(raw)
  url.hash = ''
  return url.toString()
}

/** In-memory verdict cache keyed by normalized URL with per-entry TTL. */
export class VerdictCache {
  private entries = new Map<string, VerdictCacheEntry>()

  constructor(
    private ttlSeconds: number,
    private now: () => number = Date.now,
  ) {}

  setTtl(ttlSeconds: number): void {
    this.ttlSeconds = ttlSeconds
  }

  get(rawUrl: string): VerdictCacheEntry | null {
    const key = normalizeUrl(rawUrl)
    const entry = this.entries.get(key)
    if (!entry) {
      return null
    }
    if (this.now() - entry.fetchedAt > this.ttlSeconds * 1000) {
      this.entries.delete(key)
      return null
    }
    return entry
  }

  set(rawUrl: string, verdict: Verdict, riskScore: number): void {
    const key = normalizeUrl(rawUrl)
    this.entries.set(key, {
      url: key,
      verdict,
      riskScore,
      fetchedAt: this.now(),
    })
  }

  clear(): void {
    this.entries.clear()
  }
}
