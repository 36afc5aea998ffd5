"""
Management command to synthesize a normalized field scan for a sample preset.
"""
from dataclasses import asdict

from apps.cli.base import RunCommand
from apps.cli.serializers import ScanConfigSerializer, spin_params
from apps.scan_engine.services import (
    default_scan_config,
    load_preset,
    synthesize_level_scan,
    synthesize_scan,
    write_trace,
)

SCAN_KEYS = {
    'B_start_T': 'B_start',
    'B_stop_T': 'B_stop',
    'n_points': 'n_points',
    'scan_duration_s': 'scan_duration_s',
    'n_averages': 'n_averages',
    'alpha_deg': 'alpha',
    'beta_deg': 'beta',
    'pump_mW': 'pump_mW',
    'photon_rate_per_s': 'photon_rate',
}


def build_scan(config):
    """(preset, ScanConfig) from a validated scan config."""
    preset = load_preset(config['preset'])
    if config['mode']:
        preset = preset.with_detection(config['mode'])
    if config['isolate']:
        preset = preset.isolated(config['isolate'])
    overrides = {target: config[key] for key, target in SCAN_KEYS.items() if config[key] is not None}
    return preset, default_scan_config(preset, seed=config['seed'], **overrides)


class Command(RunCommand):
    """
    Usage:
        python manage.py scan --preset W4
        python manage.py scan --preset B3A --mode absorption --photon-rate 1e9
    """

    help = 'Synthesize a field scan (normalized at 80 mT) and write it as CSV'
    serializer_class = ScanConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('--preset', help='Built-in preset name or preset JSON path')
        parser.add_argument('--mode', help='Detection mode override: PL or absorption')
        parser.add_argument('--isolate', help='Keep only this feature, flat background')
        parser.add_argument('--source', help='catalog (default) or rate-model')
        parser.add_argument('--B-start', dest='B_start_T', type=float)
        parser.add_argument('--B-stop', dest='B_stop_T', type=float)
        parser.add_argument('--n-points', dest='n_points', type=int)
        parser.add_argument('--duration', dest='scan_duration_s', type=float, help='Single-sweep duration, s')
        parser.add_argument('--averages', dest='n_averages', type=int)
        parser.add_argument('--alpha', dest='alpha_deg', type=float)
        parser.add_argument('--beta', dest='beta_deg', type=float)
        parser.add_argument('--pump', dest='pump_mW', type=float, help='Pump power, mW')
        parser.add_argument('--photon-rate', dest='photon_rate_per_s', type=float,
                            help='Detected photon rate; enables shot noise')

    def run(self, config, out_dir):
        preset, scan_config = build_scan(config)
        if config['source'] == 'rate-model':
            trace = synthesize_level_scan(
                preset, scan_config, spin_params=spin_params(**config['physics']), workers=config['workers'],
            )
        else:
            trace = synthesize_scan(preset, scan_config)

        path = write_trace(trace, out_dir / 'scan.csv')
        self.success(f'Wrote {len(trace)}-point {preset.name} scan to {path}')
        return {'scan': asdict(scan_config), 'detection_mode': preset.detection_mode}
