export interface ExtensionConfig {
  serviceBaseUrl: string
  apiKey: string
  cacheTtlSeconds: number
  enabled: boolean
}

export const DEFAULT_CONFIG: ExtensionConfig = {
  serviceBaseUrl: 'http://127.0.0.1:8000',
  apiKey: '',
  cacheTtlSeconds: 300,
  enabled: true,
}

export type Verdict = 'safe' | 'suspicious' | 'phishing'

export interface PhishingResponse {
  url: string
  risk_score: number
  verdict: Verdict
  matched_features: string[]
}

export interface VerdictCacheEntry {
  url: string
  verdict: Verdict
  riskScore: number
  fetchedAt: number
}

// What the background worker should do after a check. The extension is an
// advisory layer: it may warn or badge, but a failure never blocks the page.
export type DisplayAction =
  | { kind: 'interstitial'; targetUrl: string; riskScore: number }
  | { kind: 'badge'; text: string; color: string; reason: string }
  | { kind: 'none' }

export const NEUTRAL_BADGE: DisplayAction = {
  kind: 'badge',
  text: '?',
  color: '#9e9e9e',
  reason: 'service unreachable',
}

export const SUSPICIOUS_BADGE: DisplayAction = {
  kind: 'badge',
  text: '!',
  color: '#e8710a',
  reason: 'suspicious verdict',
}
