"""
Files written for a run and read back by ``validate``.

CSVs use '.' decimals, LF line endings and a header row. Every writer is
deterministic: same trajectory, same bytes.
"""
import csv
import json
import logging
import os

import bleach
import markdown
import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.collections import LineCollection  # noqa: E402

from .profile import DensityProfile  # noqa: E402
from .riemann import NONCLASSICAL  # noqa: E402
from .trajectory import FrontSegment, Trajectory  # noqa: E402
from .utils import jsonable  # noqa: E402

logger = logging.getLogger('lwr')

# Stable element ids in the SVG output
matplotlib.rcParams['svg.hashsalt'] = 'lwr'
SVG_METADATA = {'Date': None, 'Creator': None}

FRONT_FIELDS = ['front_id', 't_start', 'x_start', 't_end', 'x_end', 'rho_left', 'rho_right', 'kind', 'level', 'speed']
XI_FIELDS = ['t', 'xi', 'q']
PROFILE_FIELDS = ['t', 'x_left', 'x_right', 'rho']
REGION_FIELDS = ['rho_l', 'rho_r', 'label']

# Allowed HTML tags and attributes for bleach sanitization
ALLOWED_TAGS = [
    'p', 'br', 'strong', 'em', 'h1', 'h2', 'h3', 'h4', 'ul', 'ol', 'li', 'code', 'pre', 'blockquote', 'hr',
    'table', 'thead', 'tbody', 'tr', 'th', 'td',
]
ALLOWED_ATTRIBUTES = {
    'th': ['align'],
    'td': ['align'],
}


def _csv_writer(handle):
    return csv.writer(handle, lineterminator='\n')


def _dump_json(path, data):
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        json.dump(jsonable(data), handle, indent=2, sort_keys=True)
        handle.write('\n')


def write_fronts(path, segments):
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = _csv_writer(handle)
        writer.writerow(FRONT_FIELDS)
        for seg in segments:
            writer.writerow([
                seg.front_id, seg.t_start, seg.x_start, seg.t_end, seg.x_end,
                seg.rho_left, seg.rho_right, seg.kind, '' if seg.level is None else seg.level, seg.speed,
            ])


def read_fronts(path):
    segments = []
    with open(path, 'r', encoding='utf-8', newline='') as handle:
        for row in csv.DictReader(handle):
            segments.append(FrontSegment(
                front_id=int(row['front_id']),
                t_start=float(row['t_start']),
                x_start=float(row['x_start']),
                t_end=float(row['t_end']),
                x_end=float(row['x_end']),
                rho_left=float(row['rho_left']),
                rho_right=float(row['rho_right']),
                kind=row['kind'],
                level=float(row['level']) if row['level'] else None,
                speed=float(row['speed']),
            ))
    return segments


def write_xi(path, xi_trace):
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = _csv_writer(handle)
        writer.writerow(XI_FIELDS)
        writer.writerows(xi_trace.rows())


def read_xi(path):
    with open(path, 'r', encoding='utf-8', newline='') as handle:
        return [(float(r['t']), float(r['xi']), float(r['q'])) for r in csv.DictReader(handle)]


def _profile_rows(t, profile):
    edges = ['-inf'] + list(profile.breakpoints) + ['inf']
    for x_left, x_right, rho in zip(edges, edges[1:], profile.values):
        yield t, x_left, x_right, rho


def write_profiles(path, traj):
    """Profiles at the requested times, then the final one at T."""
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = _csv_writer(handle)
        writer.writerow(PROFILE_FIELDS)
        for t, profile in list(traj.profiles) + [(traj.T, traj.final_profile)]:
            writer.writerows(_profile_rows(t, profile))


def write_events(path, events):
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        for event in events:
            handle.write(json.dumps(jsonable(event.as_dict()), sort_keys=True))
            handle.write('\n')


def write_trajectory_header(path, traj):
    """Engine, horizon, configuration and end profiles: what ``validate`` needs besides fronts.csv."""
    _dump_json(path, {
        'engine': traj.engine,
        'T': traj.T,
        'config': traj.config,
        'initial_profile': traj.initial_profile.as_dict(),
        'final_profile': traj.final_profile.as_dict(),
    })


def load_trajectory(directory):
    """Rebuild the parts of a Trajectory that were written to ``directory``."""
    with open(os.path.join(directory, 'trajectory.json'), 'r', encoding='utf-8') as handle:
        header = json.load(handle)
    traj = Trajectory(
        engine=header['engine'],
        config=header['config'],
        T=float(header['T']),
        initial_profile=DensityProfile.build(**header['initial_profile']),
        final_profile=DensityProfile.build(**header['final_profile']),
    )
    traj.segments = read_fronts(os.path.join(directory, 'fronts.csv'))
    xi_path = os.path.join(directory, 'xi.csv')
    if os.path.exists(xi_path):
        for t, xi, q in read_xi(xi_path):
            traj.xi_trace.record(t, xi, q)
    return traj


def _window(traj):
    xs = [seg.x_start for seg in traj.segments] + [seg.x_end for seg in traj.segments]
    xs += list(traj.initial_profile.breakpoints) + [0.0]
    lo, hi = min(xs), max(xs)
    pad = 0.05 * max(hi - lo, 1.0)
    return lo - pad, hi + pad


def plot_fronts(path, traj):
    """x-t diagram of every front, with the nonclassical front at the exit highlighted."""
    classical = [[(s.x_start, s.t_start), (s.x_end, s.t_end)] for s in traj.segments if s.kind != NONCLASSICAL]
    constrained = [[(s.x_start, s.t_start), (s.x_end, s.t_end)] for s in traj.segments if s.kind == NONCLASSICAL]
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.add_collection(LineCollection(classical, colors='black', linewidths=0.4))
    if constrained:
        ax.add_collection(LineCollection(constrained, colors='tab:red', linewidths=2.0, label='nonclassical'))
        ax.legend(loc='upper left')
    ax.axvline(0.0, color='gray', linewidth=0.5, linestyle='--')
    ax.set_xlim(*_window(traj))
    ax.set_ylim(0.0, traj.T)
    ax.set_xlabel('x')
    ax.set_ylabel('t')
    ax.set_title(f'Fronts ({traj.engine})')
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata=SVG_METADATA)
    plt.close(fig)


def plot_profiles(path, traj):
    lo, hi = _window(traj)
    fig, ax = plt.subplots(figsize=(7, 4))
    for t, profile in [(0.0, traj.initial_profile)] + list(traj.profiles) + [(traj.T, traj.final_profile)]:
        xs = [lo] + [x for x in profile.breakpoints if lo < x < hi] + [hi]
        values = [profile.value_at(x) for x in xs[:-1]] + [profile.value_at(xs[-2])]
        ax.step(xs, values, where='post', linewidth=1.0, label=f't={t:g}')
    ax.set_xlim(lo, hi)
    ax.set_xlabel('x')
    ax.set_ylabel(r'$\rho$')
    ax.legend(fontsize='small')
    ax.grid(True)
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata=SVG_METADATA)
    plt.close(fig)


def plot_xi(path, traj, thresholds=()):
    rows = traj.xi_trace.rows()
    fig, ax = plt.subplots(figsize=(7, 3.5))
    if rows:
        ts, xis, _ = zip(*rows)
        ax.plot(ts, xis, linewidth=1.0, color='black')
    for xi in thresholds:
        ax.axhline(xi, color='gray', linewidth=0.5, linestyle='--')
    ax.set_xlabel('t')
    ax.set_ylabel(r'$\xi$')
    ax.grid(True)
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata=SVG_METADATA)
    plt.close(fig)


def render_report(scenario, traj, reports):
    """Markdown summary of a run."""
    lines = [
        f'# Run report: {scenario.name}',
        '',
        f'- engine: `{traj.engine}`',
        f'- scenario sha256: `{scenario.digest}`',
        f'- parameters: `{json.dumps(scenario.parameters, sort_keys=True)}`',
        f'- front segments: {len(traj.segments)}',
        '',
        '## Checks',
        '',
        '| check | pass | worst violation | items |',
        '|---|---|---|---|',
    ]
    for report in reports:
        lines.append(f'| {report.check} | {"yes" if report.passed else "**no**"} | '
                     f'{report.worst_violation:.3e} | {report.checked} |')
    lines += ['', '## Milestones', '']
    for key in sorted(traj.milestones):
        value = traj.milestones[key]
        if isinstance(value, (list, dict)) and len(value) > 8:
            value = f'{len(value)} entries'
        lines.append(f'- {key}: `{json.dumps(jsonable(value), sort_keys=True)}`')
    return '\n'.join(lines) + '\n'


def markdown_to_html(text):
    """Convert markdown to HTML and sanitize output."""
    html = markdown.markdown(
        text,
        extensions=[
            'markdown.extensions.extra',
            'markdown.extensions.sane_lists',
        ]
    )
    return bleach.clean(html, tags=ALLOWED_TAGS, attributes=ALLOWED_ATTRIBUTES, strip=True)


def write_report(directory, scenario, traj, reports):
    text = render_report(scenario, traj, reports)
    with open(os.path.join(directory, 'report.md'), 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(text)
    with open(os.path.join(directory, 'report.html'), 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(f'<!DOCTYPE html>\n<html><head><meta charset="utf-8"><title>{scenario.name}</title></head>'
                     f'<body>\n{markdown_to_html(text)}\n</body></html>\n')


def write_run(directory, scenario, traj, reports, svg=True):
    """Write every file of a run; returns the written file names."""
    os.makedirs(directory, exist_ok=True)
    write_fronts(os.path.join(directory, 'fronts.csv'), traj.segments)
    write_xi(os.path.join(directory, 'xi.csv'), traj.xi_trace)
    write_profiles(os.path.join(directory, 'profiles.csv'), traj)
    write_events(os.path.join(directory, 'events.jsonl'), traj.events)
    _dump_json(os.path.join(directory, 'reports.json'), [r.as_dict() for r in reports])
    _dump_json(os.path.join(directory, 'evacuation.json'), traj.milestones)
    _dump_json(os.path.join(directory, 'scenario.json'), scenario.as_dict())
    write_trajectory_header(os.path.join(directory, 'trajectory.json'), traj)
    write_report(directory, scenario, traj, reports)
    names = ['fronts.csv', 'xi.csv', 'profiles.csv', 'events.jsonl', 'reports.json', 'evacuation.json',
             'scenario.json', 'trajectory.json', 'report.md', 'report.html']
    if svg:
        plot_fronts(os.path.join(directory, 'fronts.svg'), traj)
        plot_profiles(os.path.join(directory, 'profile.svg'), traj)
        plot_xi(os.path.join(directory, 'xi.svg'), traj, scenario.constraint.get('xi', ()))
        names += ['fronts.svg', 'profile.svg', 'xi.svg']
    logger.info(f"Wrote {len(names)} files to {directory}")
    return names


def write_region_map(directory, region, stem='region_map'):
    """CSV of labels, a two-tone PGM (gray C, white N, black pathological), an SVG and the label counts."""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, f'{stem}.csv'), 'w', encoding='utf-8', newline='') as handle:
        writer = _csv_writer(handle)
        writer.writerow(REGION_FIELDS)
        writer.writerows(region.rows())
    image = region.raster()
    with open(os.path.join(directory, f'{stem}.pgm'), 'w', encoding='ascii', newline='\n') as handle:
        handle.write(f'P2\n{region.grid} {region.grid}\n255\n')
        for row in image:
            handle.write(' '.join(str(int(v)) for v in row))
            handle.write('\n')
    fig, ax = plt.subplots(figsize=(5, 5))
    R = float(region.densities[-1])
    ax.imshow(image, cmap='gray', vmin=0, vmax=255, extent=(0.0, R, 0.0, R), interpolation='nearest')
    ax.set_xlabel(r'$\rho_l$')
    ax.set_ylabel(r'$\rho_r$')
    fig.tight_layout()
    fig.savefig(os.path.join(directory, f'{stem}.svg'), format='svg', metadata=SVG_METADATA)
    plt.close(fig)
    _dump_json(os.path.join(directory, 'region_summary.json'), {'grid': region.grid, 'counts': region.counts()})
    logger.info(f"Wrote region map to {directory}")
    return [f'{stem}.csv', f'{stem}.pgm', f'{stem}.svg', 'region_summary.json']
