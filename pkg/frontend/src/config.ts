import { DEFAULT_CONFIG, type ExtensionConfig } from './types.js'

const STORAGE_KEY = 'fraudwatch_config'

export interface StorageLike {
  get(keys?: string | string[] | null): Promise<Record<string, unknown>>
  set(items: Record<string, unknown>): Promise<void>
}

/** Returns an error message, or null when the candidate config is valid. */
export function validateConfig(cfg: ExtensionConfig): string | null {
  let parsed: URL
  try {
    parsed = new URL(cfg.serviceBaseUrl)
  } catch {
    return `invalid service URL: ${cfg.serviceBaseUrl}`
  }
  if (parsed.protocol !== 'http:' && parsed.protocol !== 'https:') {
    return `service URL must be http(s): ${cfg.serviceBaseUrl}`
  }
  if (!Number.isFinite(cfg.cacheTtlSeconds) || cfg.cacheTtlSeconds <= 0) {
    return `cache TTL must be a positive number of seconds`
  }
  return null
}

export async function loadConfig(
  storage: StorageLike = chrome.storage.local,
): Promise<ExtensionConfig> {
  const stored = await storage.get(STORAGE_KEY)
  const raw = stored[STORAGE_KEY]
  if (!raw || typeof raw !== 'object') {
    return { ...DEFAULT_CONFIG }
  }
  return { ...DEFAULT_CONFIG, ...(raw as Partial<ExtensionConfig>) }
}

/** Persist a validated config; rejects (and stores nothing) when invalid. */
export async function saveConfig(
  cfg: ExtensionConfig,
  storage: StorageLike = chrome.storage.local,
): Promise<void> {
  const problem = validateConfig(cfg)
  if (problem) {
    throw new Error(problem)
  }
  await storage.set({ [STORAGE_KEY]: cfg })
}
