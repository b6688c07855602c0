import type { ExtensionConfig, PhishingResponse } from './types.js'

/** POST the URL to the phishing scorer. This is the only service endpoint the
 * extension ever calls; transaction endpoints are off limits by design. */
export async function scorePhishingUrl(
  cfg: ExtensionConfig,
  url: string,
  fetchFn: typeof fetch = fetch,
): Promise<PhishingResponse> {
  const endpoint = new URL('/v1/phishing/score', cfg.serviceBaseUrl).toString()
  const response = await fetchFn(endpoint, {
    method: 'POST',
    headers: {
      'Content-Type': 'application/json',
      'X-API-Key': cfg.apiKey,
    },
    body: JSON.stringify({ url }),
  })
  if (!response.ok) {
    throw new Error(`phishing score failed: HTTP ${response.status}`)
  }
  return (await response.json()) as PhishingResponse
}
