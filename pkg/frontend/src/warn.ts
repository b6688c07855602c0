import { normalizeUrl } from './cache.js'
import { markBypassed } from './bypass.js'

const params = new URLSearchParams(window.location.search)
const target = params.get('target') ?? ''
const score = params.get('score') ?? '?'

const targetNode = document.getElementById('target')
if (targetNode) {
  targetNode.textContent = target
}
const scoreNode = document.getElementById('score')
if (scoreNode) {
  scoreNode.textContent = score
}

document.getElementById('proceed')?.addEventListener('click', async () => {
  if (!target) {
    return
  }
  await markBypassed(normalizeUrl(target))
  window.location.href = target
})

document.getElementById('back')?.addEventListener('click', () => {
  window.history.length > 2 ? window.history.go(-2) : window.close()
})
