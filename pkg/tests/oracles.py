"""Independent oracles shared by the event tests and the acceptance suite.

These re-implement the documented detection rules as plain exhaustive
scans. They share only input data (tracks, velocities) and stdlib
primitives with the engine, never its detector code paths.
"""

import math
import random

from rallyvis.fixtures import make_rally
from rallyvis.tracking import TrackingDataset

HALF_WINDOW = 2


def oracle_anchor(dataset, pid, i, tau):
    player = dataset.player(i, pid)
    wrist = player.keypoints.get("right_wrist")
    if wrist is not None and wrist.confidence >= tau:
        return (wrist.x, wrist.y)
    ls = player.keypoints.get("left_shoulder")
    rs = player.keypoints.get("right_shoulder")
    if ls is not None and rs is not None and min(ls.confidence, rs.confidence) >= tau:
        return ((ls.x + rs.x) / 2.0, (ls.y + rs.y) / 2.0)
    return None


def oracle_local_min(dist, i):
    if not math.isfinite(dist[i]):
        return False
    for j in range(max(0, i - HALF_WINDOW), min(len(dist) - 1, i + HALF_WINDOW) + 1):
        if dist[j] < dist[i]:
            return False
        if j < i and dist[j] == dist[i]:
            return False
    return True


def oracle_hit(vels, start, end):
    for h in range(max(start, 1), end + 1):
        prev, cur = vels[h - 1], vels[h]
        if prev is None or cur is None or prev[0] == 0.0:
            continue
        if prev[0] * cur[0] < 0.0:
            return h
        if cur[0] == 0.0:
            for k in range(h + 1, end + 1):
                nxt = vels[k]
                if nxt is None or nxt[0] == 0.0:
                    continue
                if prev[0] * nxt[0] < 0.0:
                    return h
                break
    return None


def oracle_strokes(track, dataset, params):
    n = len(track.centers)
    delta = params.delta_reach_frac * dataset.video.width
    events = []
    for pid in ("A", "B"):
        dist = []
        for i in range(n):
            c = track.centers[i]
            a = oracle_anchor(dataset, pid, i, params.tau_kp)
            dist.append(math.hypot(c[0] - a[0], c[1] - a[1])
                        if c is not None and a is not None else math.inf)
        i = 0
        while i < n:
            if not dist[i] < delta:
                i += 1
                continue
            start = i
            while i < n and dist[i] < delta:
                i += 1
            end = i - 1
            if any(oracle_local_min(dist, j) for j in range(start, end + 1)):
                events.append((pid, start, end, oracle_hit(track.velocities, start, end)))
    events.sort(key=lambda e: (e[1], e[0]))
    if params.enforce_alternation:
        kept = []
        for e in events:
            if kept and kept[-1][0] == e[0]:
                continue
            kept.append(e)
        events = kept
    return events


def oracle_point_in_quad(point, quad):
    px, py = point
    sign = 0
    for k in range(4):
        ax, ay = quad[k]
        bx, by = quad[(k + 1) % 4]
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        if abs(cross) < 1e-9:
            continue
        side = 1 if cross > 0 else -1
        if sign == 0:
            sign = side
        elif side != sign:
            return False
    return True


def oracle_bounce_frames(track, quad):
    n = len(track.centers)
    frames = []
    for i in range(n):
        c = track.centers[i]
        if c is None or not oracle_point_in_quad(c, quad):
            continue
        y = c[1]
        lo, hi = max(0, i - HALF_WINDOW), min(n - 1, i + HALF_WINDOW)
        ok, rose, fell = True, False, False
        for j in range(lo, hi + 1):
            cj = track.centers[j]
            if cj is None:
                continue
            if cj[1] > y or (j < i and cj[1] == y):
                ok = False
                break
            if j < i and cj[1] < y:
                rose = True
            if j > i and cj[1] < y:
                fell = True
        if ok and rose and fell:
            frames.append(i)
    return frames


def oracle_net_hits(track, net_x, params):
    n = len(track.centers)
    hits = []
    for j in range(n - 1):
        a, b = track.centers[j], track.centers[j + 1]
        if a is None or b is None:
            continue
        da, db = a[0] - net_x, b[0] - net_x
        if not (da * db < 0.0 or (da != 0.0 and db == 0.0)):
            continue
        before = track.speeds[j]
        if before is None or before <= 0.0:
            continue
        window = [track.speeds[k] for k in range(j + 1, min(j + params.net_window, n - 1) + 1)
                  if track.speeds[k] is not None]
        if window and min(window) <= params.rho_net * before:
            hits.append(j)
    return hits


def synthesized_rally(seed: int) -> TrackingDataset:
    """Deterministic per-seed rally: oscillating ball with parabolic bounce
    arcs, varying stroke counts, spacings, and occlusion gaps."""
    rng = random.Random(seed)
    n_hits = rng.randint(2, 6)
    first = rng.randint(20, 30)
    hits = [first]
    for _ in range(n_hits - 1):
        hits.append(hits[-1] + rng.randint(40, 60))
    frame_count = hits[-1] + rng.randint(25, 40)
    occlusions = []
    for h0, h1 in zip(hits, hits[1:]):
        knee = h0 + int(0.64 * (h1 - h0))
        lo, hi = h0 + 8, knee - 8
        if hi > lo and rng.random() < 0.7:
            start = rng.randint(lo, hi - 1)
            occlusions.extend([start, start + 1])
    return make_rally(frame_count=frame_count, fps=50.0, hits=tuple(hits),
                      occlusions=tuple(occlusions))
