import { VerdictCache } from './cache.js'
import { checkNavigation, type CheckDeps } from './check.js'
import { loadConfig } from './config.js'
import { isBypassed } from './bypass.js'
import { DEFAULT_CONFIG, type DisplayAction } from './types.js'

const cache = new VerdictCache(DEFAULT_CONFIG.cacheTtlSeconds)
const inflight = new Map<number, Promise<void>>()

const deps: CheckDeps = {
  loadConfig: () => loadConfig(),
  cache,
  fetchFn: (...args) => fetch(...args),
  isBypassed,
  diagnostics: (message) => {
    console.warn('[fraudwatch]', message)
  },
}

async function applyAction(tabId: number, action: DisplayAction): Promise<void> {
  if (action.kind === 'interstitial') {
    const warn = chrome.runtime.getURL('warn.html')
    const query = `?target=${encodeURIComponent(action.targetUrl)}&score=${action.riskScore}`
    await chrome.tabs.update(tabId, { url: warn + query })
    return
  }
  if (action.kind === 'badge') {
    await chrome.action.setBadgeBackgroundColor({ tabId, color: action.color })
    await chrome.action.setBadgeText({ tabId, text: action.text })
    return
  }
  await chrome.action.setBadgeText({ tabId, text: '' })
}

chrome.webNavigation.onCommitted.addListener((details) => {
  if (details.frameId !== 0) {
    return
  }
  // one in-flight check per tab; later navigations in the same tab wait
  if (inflight.has(details.tabId)) {
    return
  }
  const task = checkNavigation(deps, details.url)
    .then((action) => applyAction(details.tabId, action))
    .catch((err) => {
      // advisory layer: never let our own failure touch the navigation
      console.warn('[fraudwatch] check failed', err)
    })
    .finally(() => {
      inflight.delete(details.tabId)
    })
  inflight.set(details.tabId, task)
})
