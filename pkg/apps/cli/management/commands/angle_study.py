"""
Management command for the misalignment study: scan and fit the GSLAC per
angle, summarize width and contrast, tabulate the figure of merit.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

import numpy as np

from apps.cli.base import RunCommand, write_lines
from apps.cli.serializers import AngleStudyConfigSerializer
from apps.inference.services import contrast_from_fit, extract_angle_dependence, fit_lorentzian
from apps.scan_engine.domain import ScanConfig
from apps.scan_engine.services import load_preset, synthesize_scan
from core.csvio import write_csv
from core.exceptions import ConfigurationError

FIT_COLUMNS = ['beta_deg', 'center_T', 'fwhm_T', 'contrast', 'stderr_fwhm_T', 'residual_rms', 'converged']
FOM_COLUMNS = ['beta_deg', 'fom_per_T', 'fom_normalized']


class Command(RunCommand):
    """
    Usage:
        python manage.py angle_study
        python manage.py angle_study --beta-min -0.3 --beta-max 0.3 --n-angles 41 --workers 4
    """

    help = 'GSLAC width and contrast versus misalignment angle, with the figure of merit'
    serializer_class = AngleStudyConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('--preset', help='Preset carrying an angle model (default W4)')
        parser.add_argument('--beta-min', dest='beta_min_deg', type=float)
        parser.add_argument('--beta-max', dest='beta_max_deg', type=float)
        parser.add_argument('--n-angles', dest='n_angles', type=int)
        parser.add_argument('--B-start', dest='B_start_T', type=float)
        parser.add_argument('--B-stop', dest='B_stop_T', type=float)
        parser.add_argument('--n-points', dest='n_points', type=int)
        parser.add_argument('--photon-rate', dest='photon_rate_per_s', type=float)

    def run(self, config, out_dir):
        preset = load_preset(config['preset'])
        if preset.angle_model is None:
            raise ConfigurationError(f'Preset {preset.name} has no angle model')
        preset = preset.isolated('GSLAC')
        betas = np.linspace(config['beta_min_deg'], config['beta_max_deg'], config['n_angles'])

        def scan_and_fit(index):
            scan_config = ScanConfig(
                B_start=config['B_start_T'], B_stop=config['B_stop_T'], n_points=config['n_points'],
                beta=float(betas[index]), photon_rate=config['photon_rate_per_s'],
                seed=config['seed'] + index,
            )
            return fit_lorentzian(synthesize_scan(preset, scan_config))

        if config['workers'] > 1:
            with ThreadPoolExecutor(max_workers=config['workers']) as pool:
                results = list(pool.map(scan_and_fit, range(len(betas))))
        else:
            results = [scan_and_fit(index) for index in range(len(betas))]
        fits = list(zip((float(b) for b in betas), results))

        write_csv(out_dir / 'angle_fits.csv', FIT_COLUMNS, (
            [beta, r.params.center, r.params.fwhm, contrast_from_fit(r), r.stderr.get('fwhm', 0.0),
             r.residual_rms, r.converged]
            for beta, r in fits
        ))

        fom = np.array([contrast_from_fit(r) / r.params.fwhm for _, r in fits])
        write_csv(out_dir / 'fom.csv', FOM_COLUMNS, zip(betas, fom, fom / fom.max()))

        summary = extract_angle_dependence(fits)
        lines = [f'{key} = {value!r}' for key, value in asdict(summary).items() if key != 'stderr']
        lines += [f'stderr_{key} = {value!r}' for key, value in summary.stderr.items()]
        lines.append(f'fom_argmax_beta_deg = {float(betas[np.argmax(fom)])!r}')
        write_lines(out_dir / 'angle_summary.txt', lines)
        for line in lines:
            self.stdout.write(line)

        self.success(f'Fitted {len(fits)} angles from {betas[0]:.3f} to {betas[-1]:.3f} deg')
        return {'preset': preset.name, 'angle_model': asdict(preset.angle_model)}
