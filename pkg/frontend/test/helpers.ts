import type { StorageLike } from '../src/config.js'

/** storage.local stand-in backed by a plain object that can outlive a
 * simulated browser restart. */
export function fakeStorage(backing: Record<string, unknown> = {}): StorageLike & {
  backing: Record<string, unknown>
} {
  return {
    backing,
    async get(keys) {
      if (keys == null) {
        return { ...backing }
      }
      const list = Array.isArray(keys) ? keys : [keys]
      const out: Record<string, unknown> = {}
      for (const key of list) {
        if (key in backing) {
          out[key] = backing[key]
        }
      }
      return out
    },
    async set(items) {
      Object.assign(backing, items)
    },
  }
}
