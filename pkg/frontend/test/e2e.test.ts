// End-to-end: the extension logic drives real HTTP against the python
// service, loaded with a really trained bundle. Requires python3 with the
// fraudwatch package installed (pip install -e ..).

import { execFileSync, spawn, type ChildProcess } from 'node:child_process'
import { mkdtempSync, rmSync } from 'node:fs'
import { createServer } from 'node:net'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { afterAll, beforeAll, describe, expect, it } from 'vitest'

import { VerdictCache } from '../src/cache.js'
import { checkNavigation, type CheckDeps } from '../src/check.js'
import { loadConfig, saveConfig } from '../src/config.js'
import { DEFAULT_CONFIG } from '../src/types.js'
import { fakeStorage } from './helpers.js'

const API_KEY = 'e2e-key'
const PHISHING_URL =
  'http://secure-login.bank-verify.xn--pple-43d.com/account/update'
const SAFE_URL = 'https://www.example.com/'

let workDir: string
let server: ChildProcess | null = null
let baseUrl: string

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer()
    srv.listen(0, '127.0.0.1', () => {
      const address = srv.address()
      if (address && typeof address === 'object') {
        const port = address.port
        srv.close(() => resolve(port))
      } else {
        reject(new Error('no port'))
      }
    })
  })
}

function cli(args: string[]): void {
  execFileSync('python3', ['-m', 'fraudwatch.cli', ...args], {
    stdio: 'pipe',
    timeout: 120_000,
  })
}

async function waitForHealth(url: string, timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs
  while (Date.now() < deadline) {
    try {
      const r = await fetch(`${url}/v1/health`)
      if (r.status === 200) {
        return
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150))
  }
  throw new Error('service did not become healthy in time')
}

function liveDeps(overrides: Partial<CheckDeps> = {}): CheckDeps & {
  diagnosticsLog: string[]
} {
  const diagnosticsLog: string[] = []
  return {
    loadConfig: async () => ({
      ...DEFAULT_CONFIG,
      serviceBaseUrl: baseUrl,
      apiKey: API_KEY,
    }),
    cache: new VerdictCache(DEFAULT_CONFIG.cacheTtlSeconds),
    fetchFn: (...args) => fetch(...args),
    isBypassed: async () => false,
    diagnostics: (message) => diagnosticsLog.push(message),
    diagnosticsLog,
    ...overrides,
  }
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), 'fraudwatch-e2e-'))
  const data = join(workDir, 'data.csv')
  const model = join(workDir, 'model.json')
  const bundle = join(workDir, 'bundle.json')
  cli(['gen-data', '--rows', '2000', '--fraud-rate', '0.02', '--seed', '17',
       '--out', data])
  cli(['train', '--data', data, '--model', model, '--seed', '17'])
  cli(['optimize-threshold', '--data', data, '--model', model,
       '--bundle', bundle, '--out', join(workDir, 'opt')])

  const port = await freePort()
  baseUrl = `http://127.0.0.1:${port}`
  server = spawn('python3', [
    '-m', 'fraudwatch.cli', 'serve',
    '--addr', `127.0.0.1:${port}`,
    '--api-key', API_KEY,
    '--bundle', bundle,
    '--audit-log', join(workDir, 'audit.jsonl'),
  ], { stdio: 'pipe' })
  await waitForHealth(baseUrl, 30_000)
}, 180_000)

afterAll(() => {
  if (server) {
    server.kill('SIGTERM')
    server = null
  }
  rmSync(workDir, { recursive: true, force: true })
})

describe('extension against the live service', () => {
  it('phishing fixture shows the interstitial', async () => {
    const action = await checkNavigation(liveDeps(), PHISHING_URL)
    expect(action.kind).toBe('interstitial')
    if (action.kind === 'interstitial') {
      expect(action.targetUrl).toBe(PHISHING_URL)
      expect(action.riskScore).toBeGreaterThanOrEqual(0.7)
    }
  }, 30_000)

  it('safe fixture causes no interruption', async () => {
    const action = await checkNavigation(liveDeps(), SAFE_URL)
    expect(action).toEqual({ kind: 'none' })
  }, 30_000)

  it('repeat visit within the TTL is served from cache', async () => {
    let calls = 0
    const counting = ((...args: Parameters<typeof fetch>) => {
      calls += 1
      return fetch(...args)
    }) as typeof fetch
    const deps = liveDeps({ fetchFn: counting })
    await checkNavigation(deps, SAFE_URL)
    await checkNavigation(deps, SAFE_URL)
    expect(calls).toBe(1)
  }, 30_000)

  it('config survives a simulated browser restart', async () => {
    const disk: Record<string, unknown> = {}
    const cfg = {
      serviceBaseUrl: baseUrl,
      apiKey: API_KEY,
      cacheTtlSeconds: 120,
      enabled: true,
    }
    await saveConfig(cfg, fakeStorage(disk))
    expect(await loadConfig(fakeStorage(disk))).toEqual(cfg)
  })

  it('stopped server degrades to a neutral badge and never blocks', async () => {
    server?.kill('SIGTERM')
    await new Promise((resolve) => setTimeout(resolve, 500))
    server = null
    const deps = liveDeps()
    const action = await checkNavigation(deps, 'https://unseen.example.org/')
    expect(action.kind).toBe('badge')
    if (action.kind === 'badge') {
      expect(action.text).toBe('?')
    }
    expect(deps.diagnosticsLog.length).toBe(1)
  }, 30_000)
})
