import init, { Demo, scenario_names, barrier_profile, attractor_profile } from "./pkg/rollout_fabrics_demo.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const STEPS_PER_FRAME = 4;

// world view: metres to pixels, y up
const view = { cx: 280, cy: 330, scale: 280 };
const px = ([x, y]) => [view.cx + x * view.scale, view.cy - y * view.scale];

let demo = null;
let playing = false;

function reset() {
  try {
    demo = new Demo($("scenario").value, $("mode").value, BigInt($("seed").value || 0));
  } catch (e) {
    $("status").textContent = String(e);
    demo = null;
  }
  draw();
}

function drawWorld(frame, preview) {
  const c = $("world").getContext("2d");
  c.clearRect(0, 0, c.canvas.width, c.canvas.height);
  c.strokeStyle = "#ddd";
  c.beginPath();
  c.moveTo(0, view.cy);
  c.lineTo(c.canvas.width, view.cy);
  c.stroke();

  for (const [x, y, r] of frame.obstacles) {
    const [u, v] = px([x, y]);
    c.fillStyle = "#888";
    c.beginPath();
    c.arc(u, v, r * view.scale, 0, 2 * Math.PI);
    c.fill();
  }
  frame.robots.forEach((robot, i) => {
    const color = COLORS[i % COLORS.length];
    for (const [x, y, r] of robot.spheres) {
      const [u, v] = px([x, y]);
      c.fillStyle = color + "22";
      c.beginPath();
      c.arc(u, v, r * view.scale, 0, 2 * Math.PI);
      c.fill();
    }
    c.strokeStyle = color;
    c.lineWidth = 4;
    c.beginPath();
    robot.joints.forEach((p, k) => (k ? c.lineTo(...px(p)) : c.moveTo(...px(p))));
    c.stroke();
    c.lineWidth = 1;
    // mission goal as a cross, active goal as a ring when it differs
    const [gx, gy] = px(robot.mission_goal);
    c.beginPath();
    c.moveTo(gx - 6, gy - 6); c.lineTo(gx + 6, gy + 6);
    c.moveTo(gx - 6, gy + 6); c.lineTo(gx + 6, gy - 6);
    c.stroke();
    if (robot.goal[0] !== robot.mission_goal[0] || robot.goal[1] !== robot.mission_goal[1]) {
      const [ax, ay] = px(robot.goal);
      c.beginPath();
      c.arc(ax, ay, 6, 0, 2 * Math.PI);
      c.stroke();
    }
    if (preview) {
      c.setLineDash([4, 3]);
      c.beginPath();
      preview.paths[i].forEach((p, k) => (k ? c.lineTo(...px(p)) : c.moveTo(...px(p))));
      c.stroke();
      c.setLineDash([]);
    }
  });
}

function statusText(frame, preview) {
  const lines = [
    `t = ${frame.t.toFixed(2)} s`,
    `deadlock events: ${frame.deadlocks}${frame.resolving ? " (resolving)" : ""}`,
  ];
  if (preview) {
    const speeds = preview.mean_speed.map((v) => v.toFixed(3)).join(", ");
    lines.push(`predicted mean speed: ${speeds} (threshold ${preview.speed_threshold})`);
    lines.push(`predicted deadlock: ${preview.deadlock}`);
  }
  if (frame.done) lines.push(frame.success ? "all goals reached" : "stopped");
  if (frame.collision) lines.push("collision");
  if (frame.failure) lines.push(frame.failure);
  return lines.join("\n");
}

function draw() {
  if (!demo) return;
  const frame = JSON.parse(demo.frame());
  let preview = null;
  try {
    preview = JSON.parse(demo.preview(Number($("horizon").value)));
  } catch (e) {
    // prediction can fail where the real run has already failed
  }
  drawWorld(frame, preview);
  $("status").textContent = statusText(frame, preview);
  return frame;
}

function tick() {
  if (!playing || !demo) return;
  demo.step(STEPS_PER_FRAME);
  const frame = draw();
  if (frame.done) {
    playing = false;
    $("play").textContent = "play";
    return;
  }
  requestAnimationFrame(tick);
}

function plot(canvas, xs, series, yRange) {
  const c = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  c.clearRect(0, 0, w, h);
  const x0 = xs[0], x1 = xs[xs.length - 1];
  const [y0, y1] = yRange;
  const u = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const v = (y) => h - pad - ((Math.min(Math.max(y, y0), y1) - y0) / (y1 - y0)) * (h - 2 * pad);
  c.strokeStyle = "#bbb";
  c.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  c.fillStyle = "#666";
  c.fillText(x0.toFixed(2), pad, h - 10);
  c.fillText(x1.toFixed(2), w - pad - 20, h - 10);
  c.fillText(y1.toPrecision(3), 2, pad + 4);
  c.fillText(y0.toPrecision(3), 2, h - pad);
  for (const { ys, color } of series) {
    c.strokeStyle = color;
    c.beginPath();
    ys.forEach((y, i) => (i ? c.lineTo(u(xs[i]), v(y)) : c.moveTo(u(xs[i]), v(y))));
    c.stroke();
  }
}

function drawBarrier() {
  const gain = Number($("gain").value), rate = Number($("rate").value), damping = Number($("damping").value);
  $("gain-out").textContent = gain.toFixed(2);
  $("rate-out").textContent = rate.toFixed(2);
  $("damping-out").textContent = damping.toFixed(1);
  const p = JSON.parse(barrier_profile(gain, rate, damping));
  const top = Math.max(1, ...p.geometry.slice(5), ...p.leaf.slice(5));
  plot($("barrier"), p.distance, [
    { ys: p.geometry, color: COLORS[0] },
    { ys: p.leaf, color: "#ff7f0e" },
  ], [Math.min(0, ...p.leaf), top]);
}

function drawAttractor() {
  const k = Number($("k").value), s = Number($("s").value);
  $("k-out").textContent = k.toFixed(1);
  $("s-out").textContent = s.toFixed(2);
  const p = JSON.parse(attractor_profile(k, s));
  const top = Math.max(...p.potential, k);
  plot($("attractor"), p.distance, [
    { ys: p.potential, color: "#999" },
    { ys: p.pull, color: COLORS[0] },
  ], [0, top]);
}

await init();
for (const name of JSON.parse(scenario_names())) {
  $("scenario").add(new Option(name.replace("_", " "), name));
}
$("reset").onclick = reset;
for (const id of ["scenario", "mode", "seed"]) $(id).onchange = reset;
$("play").onclick = () => {
  playing = !playing;
  $("play").textContent = playing ? "pause" : "play";
  if (playing) requestAnimationFrame(tick);
};
$("horizon").oninput = () => {
  $("horizon-out").textContent = $("horizon").value;
  draw();
};
for (const id of ["gain", "rate", "damping"]) $(id).oninput = drawBarrier;
for (const id of ["k", "s"]) $(id).oninput = drawAttractor;
reset();
drawBarrier();
drawAttractor();
