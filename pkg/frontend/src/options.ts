import { loadConfig, saveConfig, validateConfig } from './config.js'
import type { ExtensionConfig } from './types.js'

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (!node) {
    throw new Error(`missing element #${id}`)
  }
  return node as T
}

function readForm(): ExtensionConfig {
  return {
    serviceBaseUrl: el<HTMLInputElement>('service-url').value.trim(),
    apiKey: el<HTMLInputElement>('api-key').value,
    cacheTtlSeconds: Number(el<HTMLInputElement>('cache-ttl').value),
    enabled: el<HTMLInputElement>('enabled').checked,
  }
}

function fillForm(cfg: ExtensionConfig): void {
  el<HTMLInputElement>('service-url').value = cfg.serviceBaseUrl
  el<HTMLInputElement>('api-key').value = cfg.apiKey
  el<HTMLInputElement>('cache-ttl').value = String(cfg.cacheTtlSeconds)
  el<HTMLInputElement>('enabled').checked = cfg.enabled
}

function showStatus(message: string, isError: boolean): void {
  const status = el<HTMLParagraphElement>('status')
  status.textContent = message
  status.className = isError ? 'error' : 'ok'
}

async function init(): Promise<void> {
  fillForm(await loadConfig())
  el<HTMLButtonElement>('save').addEventListener('click', async () => {
    const candidate = readForm()
    const problem = validateConfig(candidate)
    if (problem) {
      // invalid input never clobbers the stored config
      showStatus(problem, true)
      return
    }
    try {
      await saveConfig(candidate)
      showStatus('saved', false)
    } catch (err) {
      showStatus(`storage failure: ${String(err)}`, true)
    }
  })
}

void init()
