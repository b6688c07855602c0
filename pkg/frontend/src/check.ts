import { scorePhishingUrl } from './api.js'
import { normalizeUrl, VerdictCache } from './cache.js'
import {
  NEUTRAL_BADGE,
  SUSPICIOUS_BADGE,
  type DisplayAction,
  type ExtensionConfig,
  type Verdict,
} from './types.js'

export interface CheckDeps {
  loadConfig(): Promise<ExtensionConfig>
  cache: VerdictCache
  fetchFn: typeof fetch
  isBypassed(normalizedUrl: string): Promise<boolean>
  diagnostics(message: string): void
}

function actionFor(verdict: Verdict, url: string, riskScore: number): DisplayAction {
  if (verdict === 'phishing') {
    return { kind: 'interstitial', targetUrl: url, riskScore }
  }
  if (verdict === 'suspicious') {
    return SUSPICIOUS_BADGE
  }
  return { kind: 'none' }
}

/** Decide what to display for one navigation. Fail-open: any failure in this
 * advisory layer degrades to a neutral badge and never blocks the page. */
export async function checkNavigation(
  deps: CheckDeps,
  targetUrl: string,
): Promise<DisplayAction> {
  let config: ExtensionConfig
  try {
    config = await deps.loadConfig()
  } catch (err) {
    deps.diagnostics(`config load failed: ${String(err)}`)
    return { kind: 'none' }
  }
  if (!config.enabled) {
    return { kind: 'none' }
  }
  if (!/^https?:/i.test(targetUrl)) {
    return { kind: 'none' }
  }

  let normalized: string
  try {
    normalized = normalizeUrl(targetUrl)
  } catch {
    return { kind: 'none' }
  }
  if (await deps.isBypassed(normalized)) {
    return { kind: 'none' }
  }

  deps.cache.setTtl(config.cacheTtlSeconds)
  const cached = deps.cache.get(normalized)
  if (cached) {
    return actionFor(cached.verdict, targetUrl, cached.riskScore)
  }

  try {
    const result = await scorePhishingUrl(config, targetUrl, deps.fetchFn)
    deps.cache.set(normalized, result.verdict, result.risk_score)
    return actionFor(result.verdict, targetUrl, result.risk_score)
  } catch (err) {
    deps.diagnostics(`score request failed for ${normalized}: ${String(err)}`)
    return NEUTRAL_BADGE
  }
}
