#include <string>

#include "movingout/play/server.hpp"

namespace movingout::play {

namespace {

const char* const kPage = R"HTML(<!doctype html>
<html>
<head>
<meta charset="utf-8">
<title>Moving Out</title>
<style>
body { font-family: sans-serif; background: #f4f1ea; margin: 16px; }
#bar input, #bar select { margin-right: 8px; }
#hud { margin: 8px 0; font-family: monospace; }
#banner { color: #b00; min-height: 1.2em; }
canvas { background: #fff; border: 1px solid #888; }
</style>
</head>
<body>
<div id="bar">
  map <input id="map" value="1" size="3">
  role <select id="role"><option>agent-i</option><option>agent-j</option></select>
  policy <input id="policy" value="scripted-helper" size="18">
  mode <select id="mode"><option>raw</option><option>bass-oracle</option><option>bass-model</option></select>
  seed <input id="seed" value="0" size="4">
  <button id="start">start</button>
</div>
<div id="hud">arrows/WASD move, space grasps</div>
<div id="banner"></div>
<canvas id="view" width="640" height="640"></canvas>
<script>
const MAX_MOVE = 0.03, RAMP_MS = 200, MARGIN = 16;
const canvas = document.getElementById('view'), ctx = canvas.getContext('2d');
const hud = document.getElementById('hud'), banner = document.getElementById('banner');
let ws = null, geometry = null, latest = null, endInfo = null;
const keys = new Set();
let graspEdge = false, heldSince = null;

const scale = () => canvas.width - 2 * MARGIN;
const px = (x) => MARGIN + x * scale();
const py = (y) => MARGIN + y * scale();

function direction() {
  let dx = 0, dy = 0;
  if (keys.has('ArrowLeft') || keys.has('a')) dx -= 1;
  if (keys.has('ArrowRight') || keys.has('d')) dx += 1;
  if (keys.has('ArrowUp') || keys.has('w')) dy -= 1;
  if (keys.has('ArrowDown') || keys.has('s')) dy += 1;
  return [dx, dy];
}

function currentAction() {
  const [dx, dy] = direction();
  const grasp = graspEdge ? 1 : 0;
  graspEdge = false;
  if (dx === 0 && dy === 0) {
    heldSince = null;
    const me = latest ? latest.agents[latest.human === 'agent-i' ? 0 : 1] : { cos: 1, sin: 0 };
    return { type: 'action', move: 0, cos: me.cos, sin: me.sin, grasp };
  }
  if (heldSince === null) heldSince = performance.now();
  const n = Math.hypot(dx, dy);
  const ramp = Math.min(1, (performance.now() - heldSince) / RAMP_MS);
  return { type: 'action', move: MAX_MOVE * ramp, cos: dx / n, sin: dy / n, grasp };
}

function gamepadAction() {
  const pads = navigator.getGamepads ? navigator.getGamepads() : [];
  const pad = pads && pads[0];
  if (!pad) return null;
  const x = pad.axes[0] || 0, y = pad.axes[1] || 0, m = Math.min(1, Math.hypot(x, y));
  if (m < 0.15) return null;
  return { type: 'action', move: MAX_MOVE * m, cos: x / Math.hypot(x, y), sin: y / Math.hypot(x, y),
           grasp: pad.buttons[0] && pad.buttons[0].pressed ? 1 : 0 };
}

window.addEventListener('keydown', (e) => {
  if (e.key === ' ') { if (!e.repeat) graspEdge = true; e.preventDefault(); return; }
  keys.add(e.key.length === 1 ? e.key.toLowerCase() : e.key);
});
window.addEventListener('keyup', (e) => keys.delete(e.key.length === 1 ? e.key.toLowerCase() : e.key));

function drawItem(it) {
  const colors = { small: '#7fb069', medium: '#e6aa68', large: '#ca3c25' };
  ctx.save();
  ctx.translate(px(it.x), py(it.y));
  ctx.rotate(Math.atan2(it.sin, it.cos));
  ctx.fillStyle = colors[it.size] || '#999';
  ctx.globalAlpha = it.delivered ? 0.45 : 1;
  const r = it.radius * scale();
  ctx.beginPath();
  if (it.shape === 'circle') {
    ctx.arc(0, 0, r, 0, 2 * Math.PI);
  } else {
    const n = Math.max(3, it.vertices || 4), star = it.shape === 'star';
    const pts = star ? 2 * n : n;
    for (let k = 0; k < pts; ++k) {
      const a = (2 * Math.PI * k) / pts, rr = star && k % 2 ? r * 0.5 : r;
      k ? ctx.lineTo(rr * Math.cos(a), rr * Math.sin(a)) : ctx.moveTo(rr * Math.cos(a), rr * Math.sin(a));
    }
    ctx.closePath();
  }
  ctx.fill();
  if (it.delivered) { ctx.strokeStyle = '#2a7'; ctx.lineWidth = 2; ctx.stroke(); }
  ctx.restore();
}

function draw() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (geometry) {
    ctx.fillStyle = '#cfe8cf';
    for (const g of geometry.goals) ctx.fillRect(px(g[0]), py(g[1]), (g[2] - g[0]) * scale(), (g[3] - g[1]) * scale());
    ctx.fillStyle = '#555';
    for (const w of geometry.walls) ctx.fillRect(px(w[0]), py(w[1]), (w[2] - w[0]) * scale(), (w[3] - w[1]) * scale());
  }
  ctx.strokeStyle = '#888';
  ctx.strokeRect(MARGIN, MARGIN, scale(), scale());
  if (!latest) return;
  for (const it of latest.items) drawItem(it);
  latest.agents.forEach((a, k) => {
    const r = 0.025 * scale();
    ctx.fillStyle = k === 0 ? '#f28cb1' : '#6fa8dc';
    ctx.beginPath(); ctx.arc(px(a.x), py(a.y), r, 0, 2 * Math.PI); ctx.fill();
    ctx.strokeStyle = '#222'; ctx.lineWidth = a.hold >= 0 ? 3 : 1; ctx.stroke();
    ctx.beginPath(); ctx.moveTo(px(a.x), py(a.y)); ctx.lineTo(px(a.x) + r * 1.6 * a.cos, py(a.y) + r * 1.6 * a.sin); ctx.stroke();
  });
  const left = ((latest.max_ticks - latest.t) / 10).toFixed(1);
  const delivered = latest.items.filter((i) => i.delivered).length;
  let text = `t=${latest.t} left ${left}s delivered ${delivered}/${latest.items.length} you: ${latest.human}`;
  if (endInfo) {
    const m = endInfo.metrics;
    text += ` | ${endInfo.reason}: TCR ${m.tcr.toFixed(3)} NFD ${m.nfd === null ? 'n/a' : m.nfd.toFixed(3)}` +
            ` WT ${m.wt_seconds.toFixed(1)}s AC ${m.ac.toFixed(3)}`;
  }
  hud.textContent = text;
}

function onMessage(ev) {
  let msg;
  try { msg = JSON.parse(ev.data); } catch (e) { banner.textContent = 'malformed message'; return; }
  if (msg.type === 'state') {
    if (msg.walls) geometry = { walls: msg.walls, goals: msg.goals };
    latest = msg;
    if (ws && ws.readyState === WebSocket.OPEN && !endInfo) ws.send(JSON.stringify(gamepadAction() || currentAction()));
  } else if (msg.type === 'end') {
    endInfo = msg;
  } else if (msg.type === 'error') {
    banner.textContent = msg.reason;
  } else {
    banner.textContent = 'unexpected message ' + msg.type;
  }
  requestAnimationFrame(draw);
}

document.getElementById('start').onclick = () => {
  if (ws) ws.close();
  geometry = null; latest = null; endInfo = null; banner.textContent = '';
  ws = new WebSocket(`ws://${location.host}/play`);
  ws.onmessage = onMessage;
  ws.onopen = () => {
    const v = (id) => document.getElementById(id).value;
    const map = /^\d+$/.test(v('map')) ? parseInt(v('map'), 10) : v('map');
    ws.send(JSON.stringify({ type: 'hello', map, role: v('role'), policy: v('policy'), mode: v('mode'),
                             seed: parseInt(v('seed'), 10) || 0 }));
  };
  ws.onclose = () => { if (!endInfo) banner.textContent = banner.textContent || 'connection closed'; };
};
draw();
</script>
</body>
</html>
)HTML";

}  // namespace

const std::string& builtin_client_page() {
  static const std::string page(kPage);
  return page;
}

}  // namespace movingout::play
