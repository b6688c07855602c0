import type { StorageLike } from './config.js'

// Proceed-anyway overrides live in session storage (falling back to local)
// so one explicit click lasts for the browsing session, not forever.
const PREFIX = 'fraudwatch_bypass:'
const BYPASS_TTL_MS = 12 * 60 * 60 * 1000

function area(): StorageLike {
  return (chrome.storage.session ?? chrome.storage.local) as StorageLike
}

export async function markBypassed(
  normalizedUrl: string,
  storage: StorageLike = area(),
): Promise<void> {
  await storage.set({ [PREFIX + normalizedUrl]: Date.now() })
}

export async function isBypassed(
  normalizedUrl: string,
  storage: StorageLike = area(),
): Promise<boolean> {
  const key = PREFIX + normalizedUrl
  const stored = await storage.get(key)
  const at = stored[key]
  return typeof at === 'number' && Date.now() - at < BYPASS_TTL_MS
}
