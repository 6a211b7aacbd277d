import numpy as np

from minwidth.mono1d import pl_from_points


def random_alternating_profile(rng, max_extrema=6, allow_ties=False):
    """Random extrema pattern: kinds, values and tail values."""
    m = int(rng.integers(0, max_extrema + 1))
    first_max = bool(rng.integers(0, 2))
    kinds = []
    values = []
    for i in range(m):
        is_max = first_max if i % 2 == 0 else not first_max
        kinds.append("max" if is_max else "min")
        if allow_ties and i >= 2 and rng.random() < 0.3:
            values.append(values[i - 2])  # tie with the previous same-kind extremum
        else:
            values.append(
                float(rng.uniform(0.6, 1.0)) if is_max else float(rng.uniform(0.0, 0.4))
            )
    if m == 0:
        a, b = sorted(rng.uniform(0.0, 1.0, 2))
        return [], [], float(a), float(b + 0.05)
    left = float(rng.uniform(0.41, 0.59))
    right = float(rng.uniform(0.41, 0.59))
    return kinds, values, left, right


def profile_to_pl(rng, kinds, values, left, right, extra_knots=2):
    """Strict PL function realizing the profile, with wiggle knots inside runs."""
    m = len(kinds)
    locs = np.sort(rng.uniform(0.1, 0.9, m))
    anchor_x = np.concatenate([[0.0], locs, [1.0]])
    anchor_y = np.asarray([left] + list(values) + [right])
    xs_all = [0.0]
    ys_all = [left]
    for i in range(m + 1):
        x0, x1 = anchor_x[i], anchor_x[i + 1]
        y0, y1 = anchor_y[i], anchor_y[i + 1]
        k = int(rng.integers(0, extra_knots + 1))
        fr_x = np.sort(rng.uniform(0.15, 0.85, k))
        fr_y = np.sort(rng.uniform(0.1, 0.9, k))
        for fx, fy in zip(fr_x, fr_y):
            xs_all.append(x0 + fx * (x1 - x0))
            ys_all.append(y0 + fy * (y1 - y0))
        xs_all.append(x1)
        ys_all.append(y1)
    return pl_from_points(np.asarray(xs_all), np.asarray(ys_all))


def random_same_signature_pair(rng, max_extrema=6, allow_ties=False):
    """Two random PL functions on [0, 1] with the same ordering of extrema."""
    kinds, values, left, right = random_alternating_profile(rng, max_extrema, allow_ties)
    f1 = profile_to_pl(rng, kinds, values, left, right)

    seq = np.asarray([left] + list(values) + [right])
    uniq = np.unique(seq)
    new_levels = np.sort(rng.uniform(0.0, 1.0, len(uniq)))
    remap = {u: new_levels[i] for i, u in enumerate(uniq)}
    seq2 = np.asarray([remap[v] for v in seq])
    f2 = profile_to_pl(rng, kinds, list(seq2[1:-1]), float(seq2[0]), float(seq2[-1]))
    return f1, f2
