"""
Management command for the pump-power study: GSLAC contrast and center
versus pump power, saturation fit and thermal shift.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from apps.cli.base import RunCommand, write_lines
from apps.cli.serializers import PowerStudyConfigSerializer
from apps.inference.services import contrast_from_fit, fit_line, fit_lorentzian, fit_saturation
from apps.scan_engine.domain import ScanConfig
from apps.scan_engine.services import load_preset, synthesize_scan
from core.csvio import write_csv
from core.exceptions import ConfigurationError

POWER_COLUMNS = ['pump_mW', 'center_T', 'fwhm_T', 'contrast', 'stderr_center_T', 'converged']


class Command(RunCommand):
    """
    Usage:
        python manage.py power_study
        python manage.py power_study --pump 50 --pump 100 --pump 400 --pump 800
    """

    help = 'GSLAC contrast and center versus pump power with a saturation fit'
    serializer_class = PowerStudyConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('--preset', help='Preset carrying a saturation model (default B3A)')
        parser.add_argument('--pump', dest='pump_mW', type=float, action='append', help='Pump power, mW; repeat')
        parser.add_argument('--B-start', dest='B_start_T', type=float)
        parser.add_argument('--B-stop', dest='B_stop_T', type=float)
        parser.add_argument('--n-points', dest='n_points', type=int)
        parser.add_argument('--photon-rate', dest='photon_rate_per_s', type=float)

    def run(self, config, out_dir):
        preset = load_preset(config['preset'])
        if preset.saturation is None:
            raise ConfigurationError(f'Preset {preset.name} has no saturation model')
        preset = preset.isolated('GSLAC')
        powers = np.array(config['pump_mW'], dtype=float)

        def scan_and_fit(index):
            scan_config = ScanConfig(
                B_start=config['B_start_T'], B_stop=config['B_stop_T'], n_points=config['n_points'],
                pump_mW=float(powers[index]), photon_rate=config['photon_rate_per_s'],
                seed=config['seed'] + index,
            )
            return fit_lorentzian(synthesize_scan(preset, scan_config))

        if config['workers'] > 1:
            with ThreadPoolExecutor(max_workers=config['workers']) as pool:
                results = list(pool.map(scan_and_fit, range(len(powers))))
        else:
            results = [scan_and_fit(index) for index in range(len(powers))]

        contrasts = np.array([contrast_from_fit(r) for r in results])
        centers = np.array([r.params.center for r in results])
        write_csv(out_dir / 'power_fits.csv', POWER_COLUMNS, (
            [p, r.params.center, r.params.fwhm, c, r.stderr.get('center', 0.0), r.converged]
            for p, r, c in zip(powers, results, contrasts)
        ))

        saturation = fit_saturation(powers, contrasts)
        shift = fit_line(powers, centers) if len(np.unique(powers)) > 1 else None
        lines = [
            f'C_max = {saturation.params.C_max!r}',
            f'stderr_C_max = {saturation.stderr.get("C_max", 0.0)!r}',
            f'P_sat_mW = {saturation.params.P_sat!r}',
            f'stderr_P_sat_mW = {saturation.stderr.get("P_sat", 0.0)!r}',
            f'flags = {",".join(saturation.flags)}',
        ]
        if shift is not None:
            lines += [
                f'shift_coeff_T_per_mW = {shift.slope!r}',
                f'zero_power_center_T = {shift.intercept!r}',
            ]
        write_lines(out_dir / 'saturation.txt', lines)
        for line in lines:
            self.stdout.write(line)
        if saturation.flags:
            self.stdout.write(self.style.WARNING(f'Saturation fit flagged: {", ".join(saturation.flags)}'))

        self.success(f'Fitted {len(powers)} pump powers')
        return {'preset': preset.name}
