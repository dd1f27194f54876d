"""Workspace report: sector volume, aperture, cavity coverage, clearance.

The report is assembled once into a plain dict, then rendered three ways:
delimited text for humans, a JSON twin for tooling, and schematic matplotlib
figures (side-view reach sector, top-down table layout) written to files.
All sampling is seeded; the PRNG stream is named in the report so numbers
can be reproduced.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .kinematics import JointLimits, Point3, is_reachable, workspace_volume
from .scene import Scene, check_clearance, coverage

PRNG_NAME = "numpy-pcg64"


def monte_carlo_volume(limits: JointLimits, samples: int, seed: int) -> tuple[float, float]:
    """Rejection-sampling estimate of the reachable volume and the measured
    cone aperture (degrees), over the bounding lower half-box."""
    rng = np.random.default_rng(seed)
    r = limits.insertion_max / 1000.0
    pts = rng.uniform([-r, -r, -r], [r, r, 0.0], size=(samples, 3))
    ang_mdeg = np.degrees(np.arctan2(np.hypot(pts[:, 0], pts[:, 1]), -pts[:, 2])) * 1000.0
    norm_um = np.linalg.norm(pts, axis=1) * 1000.0
    inside = ((pts[:, 2] < 0)
              & (norm_um <= limits.insertion_max + 1e-3)
              & (ang_mdeg <= limits.tilt_max + 1e-6))
    volume = inside.mean() * (2 * r) * (2 * r) * r
    if inside.any():
        aperture = 2.0 * float(ang_mdeg[inside].max()) / 1000.0
    else:
        aperture = 0.0
    return float(volume), aperture


def build_report(limits: JointLimits, scene: Scene, samples: int, seed: int) -> dict:
    analytic = workspace_volume(limits)
    mc_volume, aperture = monte_carlo_volume(limits, samples, seed)
    frac = coverage(scene.cavity, limits, samples=samples, seed=seed)
    conflicts = check_clearance(scene.sites, scene.base)
    return {
        "seed": seed,
        "samples": samples,
        "prng": PRNG_NAME,
        "limits": {
            "tilt_max_mdeg": limits.tilt_max,
            "insertion_max_um": limits.insertion_max,
            "pan_speed_max_mdeg_s": limits.pan_speed_max,
            "tilt_speed_max_mdeg_s": limits.tilt_speed_max,
            "insertion_speed_max_um_s": limits.insertion_speed_max,
        },
        "volume": {
            "analytic_mm3": analytic,
            "monte_carlo_mm3": mc_volume,
            "mc_rel_error": abs(mc_volume - analytic) / analytic,
            "aperture_deg": aperture,
        },
        "coverage": {
            "cavity_semi_axes_mm": [scene.cavity.ax, scene.cavity.ay, scene.cavity.az],
            "cavity_center_mm": list(scene.cavity.center),
            "fraction": frac,
        },
        "clearance": {
            "base_diameter_mm": scene.base.diameter,
            "sites": len(scene.sites),
            "conflicts": [
                {
                    "label": c.site.label,
                    "x_mm": c.site.x,
                    "y_mm": c.site.y,
                    "diameter_mm": c.site.diameter,
                    "cause": c.cause.value,
                    "distance_mm": c.distance,
                }
                for c in conflicts
            ],
        },
    }


def render_text(report: dict) -> str:
    vol = report["volume"]
    cov = report["coverage"]
    clear = report["clearance"]
    lines = [
        "workspace report",
        f"seed\t{report['seed']}",
        f"samples\t{report['samples']}",
        f"prng\t{report['prng']}",
        "",
        "[volume]",
        f"analytic_mm3\t{vol['analytic_mm3']:.3f}",
        f"monte_carlo_mm3\t{vol['monte_carlo_mm3']:.3f}",
        f"mc_rel_error\t{vol['mc_rel_error']:.6f}",
        f"aperture_deg\t{vol['aperture_deg']:.4f}",
        "",
        "[coverage]",
        "cavity_semi_axes_mm\t" + "\t".join(f"{v:.1f}" for v in cov["cavity_semi_axes_mm"]),
        f"fraction\t{cov['fraction']:.6f}",
        "",
        "[clearance]",
        f"base_diameter_mm\t{clear['base_diameter_mm']:.1f}",
        f"sites\t{clear['sites']}",
        f"conflicts\t{len(clear['conflicts'])}",
    ]
    if clear["conflicts"]:
        lines.append("label\tx_mm\ty_mm\tdiameter_mm\tcause\tdistance_mm")
        for c in clear["conflicts"]:
            lines.append(f"{c['label'] or '-'}\t{c['x_mm']:.1f}\t{c['y_mm']:.1f}"
                         f"\t{c['diameter_mm']:.1f}\t{c['cause']}\t{c['distance_mm']:.2f}")
    return "\n".join(lines) + "\n"


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


# --- figures ---------------------------------------------------------------

def _sideview_figure(limits: JointLimits, scene: Scene, seed: int):
    r = limits.insertion_max / 1000.0
    phi = math.radians(limits.tilt_max / 1000.0)
    fig, ax = plt.subplots(figsize=(6.0, 5.0))

    # reach sector boundary in the x-z section
    for sign in (-1.0, 1.0):
        ax.plot([0, sign * r * math.sin(phi)], [0, -r * math.cos(phi)],
                color="tab:blue", lw=1.2)
    theta = np.linspace(-phi, phi, 200)
    ax.plot(r * np.sin(theta), -r * np.cos(theta), color="tab:blue", lw=1.2,
            label="reach sector")

    # cavity outline (x-z section through the pivot)
    cav = scene.cavity
    t = np.linspace(0.0, math.pi, 200)
    ax.plot(cav.center[0] + cav.ax * np.cos(t), cav.center[2] - cav.az * np.sin(t),
            color="tab:red", lw=1.2, label="cavity section")
    ax.plot([cav.center[0] - cav.ax, cav.center[0] + cav.ax],
            [cav.center[2], cav.center[2]], color="tab:red", lw=1.2)

    # cavity samples colored by reachability; the sector is rotationally
    # symmetric, so signed lateral radius vs depth shows it faithfully
    pts = cav.sample(1500, seed)
    reach = np.array([is_reachable(Point3(float(x), float(y), float(z)), limits)
                      for x, y, z in pts])
    lateral = np.hypot(pts[:, 0], pts[:, 1]) * np.where(pts[:, 0] >= 0, 1.0, -1.0)
    ax.scatter(lateral[reach], pts[reach, 2], s=2, color="tab:green", alpha=0.4,
               label="reachable")
    ax.scatter(lateral[~reach], pts[~reach, 2], s=2, color="tab:orange", alpha=0.4,
               label="out of reach")

    ax.axhline(0.0, color="gray", lw=0.8)
    ax.set_xlabel("signed lateral radius from pivot [mm]")
    ax.set_ylabel("depth below wall [mm]")
    ax.set_title("reach sector vs cavity (side section)")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    return fig


def _topdown_figure(scene: Scene, conflicts):
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    base = scene.base
    ax.add_patch(plt.Circle(base.center, base.diameter / 2.0, fill=False,
                            color="tab:blue", lw=1.5, label="robot base"))
    ax.plot([base.clamp_arm[0][0], base.clamp_arm[1][0]],
            [base.clamp_arm[0][1], base.clamp_arm[1][1]],
            color="tab:blue", lw=3.0, alpha=0.6, label="clamp arm")
    ax.plot(*base.center, marker="+", color="tab:blue", ms=10)

    conflicted = {(c.site.x, c.site.y) for c in conflicts}
    for site in scene.sites:
        color = "tab:red" if (site.x, site.y) in conflicted else "tab:green"
        ax.add_patch(plt.Circle((site.x, site.y), site.diameter / 2.0,
                                fill=True, color=color, alpha=0.7))
        if site.label:
            ax.annotate(site.label, (site.x, site.y), textcoords="offset points",
                        xytext=(6, 6), fontsize=7)

    ax.set_xlabel("x [mm]")
    ax.set_ylabel("y [mm]")
    ax.set_title("table layout: base, clamp arm, trocar sites")
    ax.set_aspect("equal")
    ax.relim()
    ax.autoscale_view()
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    return fig


def render_figures(limits: JointLimits, scene: Scene, seed: int,
                   outdir: str | Path) -> list[Path]:
    """Write the report figures; returns the created file paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    fig = _sideview_figure(limits, scene, seed)
    path = outdir / "workspace_sideview.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(path)

    fig = _topdown_figure(scene, check_clearance(scene.sites, scene.base))
    path = outdir / "layout_topdown.png"
    fig.savefig(path, dpi=130)
    plt.close(fig)
    written.append(path)
    return written
