import init, { detection_curve, n_pmf_comparison, fit_m0_counts } from "./pkg/recap_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plot(canvas, xs, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 36;
  ctx.clearRect(0, 0, w, h);
  const ymax = Math.max(...series.flatMap((s) => s.y)) || 1;
  const xmin = xs[0], xmax = xs[xs.length - 1];
  const px = (x) => pad + ((x - xmin) / (xmax - xmin || 1)) * (w - 2 * pad);
  const py = (y) => h - pad - (y / ymax) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "12px sans-serif";
  ctx.fillText(xmin.toString(), pad, h - pad + 14);
  ctx.fillText(xmax.toString(), w - pad - 24, h - pad + 14);
  ctx.fillText(ymax.toPrecision(3), 2, pad + 4);
  series.forEach((s, k) => {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.y[i])) : ctx.moveTo(px(x), py(s.y[i]))));
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, w - pad - 120, pad + 16 + 14 * k);
  });
}

function guard(note, f) {
  try {
    f();
    note.classList.remove("err");
  } catch (e) {
    note.textContent = String(e);
    note.classList.add("err");
  }
}

function drawCurve() {
  guard($("curve-note"), () => {
    const c = JSON.parse(detection_curve(num("b0"), num("b1"), num("dmax"), 200));
    plot($("curve-plot"), c.distance, [{ y: c.probability, color: "#1565c0", label: "p(d)" }]);
    const at100 = c.probability[c.distance.findIndex((d) => d >= 100)];
    $("curve-note").textContent = `p(0) = ${c.probability[0].toFixed(4)}, p(100 m) = ${(at100 ?? NaN).toFixed(4)}`;
  });
}

function drawNpmf() {
  guard($("npmf-note"), () => {
    const r = JSON.parse(n_pmf_comparison(num("np"), num("npsi"), num("nm"), num("nj")));
    plot($("npmf-plot"), r.n, [
      { y: r.binomial, color: "#2e7d32", label: "binomial" },
      { y: r.poisson, color: "#c62828", label: "Poisson" },
    ]);
    $("npmf-note").textContent = `total variation distance ${r.total_variation.toFixed(4)}`;
  });
}

function runFit() {
  const out = $("fit-out");
  out.textContent = "running...";
  // Let the page repaint before the synchronous fit.
  setTimeout(() => {
    guard(out, () => {
      const r = JSON.parse(fit_m0_counts($("counts").value, num("fj"), num("fm"), num("fk"), BigInt(num("fseed"))));
      const rows = r.summary.columns
        .map((c) => `<tr><td>${c.name}</td><td>${c.mean.toFixed(4)}</td><td>${c.sd.toFixed(4)}</td>` +
          `<td>${c.q025.toFixed(3)}</td><td>${c.q975.toFixed(3)}</td><td>${c.ess ? c.ess.toFixed(0) : "-"}</td></tr>`)
        .join("");
      out.innerHTML =
        `<p>n = ${r.observed}; power to detect ${r.power_to_detect.toFixed(3)}; ` +
        `stage-2 acceptance ${r.stage2_acceptance.toFixed(3)}</p>` +
        `<table><tr><th></th><th>mean</th><th>sd</th><th>2.5%</th><th>97.5%</th><th>ESS</th></tr>${rows}</table>`;
    });
  }, 10);
}

await init();
["b0", "b1", "dmax"].forEach((id) => $(id).addEventListener("input", drawCurve));
["np", "npsi", "nm", "nj"].forEach((id) => $(id).addEventListener("input", drawNpmf));
$("run").addEventListener("click", runFit);
drawCurve();
drawNpmf();
