"""
Management command for the lock-in magnetometer: calibration sweep, noise
spectra at the sensitive and insensitive bias, sensitivity report.
"""
import numpy as np

from apps.cli.base import RunCommand, write_lines
from apps.cli.serializers import MagnetometerConfigSerializer, magnetometer_scenario
from apps.lockin_dsp.services import (
    run_magnetometer,
    sensitivity_report_lines,
    write_spectrum,
    write_time_series,
)
from core.csvio import write_csv


class Command(RunCommand):
    """
    Usage:
        python manage.py magnetometer
        python manage.py magnetometer --acquisition 4 --field-noise 0.45e-9 --floor 70e-12
    """

    help = 'Simulate the lock-in magnetometer and report its noise floors'
    serializer_class = MagnetometerConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('--center', dest='center_T', type=float, help='Feature center, T')
        parser.add_argument('--fwhm', dest='fwhm_T', type=float, help='Feature width, T')
        parser.add_argument('--contrast', dest='contrast', type=float)
        parser.add_argument('--acquisition', dest='acquisition_s', type=float, help='Record length, s')
        parser.add_argument('--insensitive-bias', dest='insensitive_bias_T', type=float)
        parser.add_argument('--modulation-amplitude', dest='modulation__amplitude_T', type=float)
        parser.add_argument('--modulation-frequency', dest='modulation__frequency_Hz', type=float)
        parser.add_argument('--time-constant', dest='modulation__time_constant_s', type=float)
        parser.add_argument('--filter-order', dest='modulation__filter_order', type=int)
        parser.add_argument('--field-noise', dest='noise__field_noise_asd_T', type=float,
                            help='Injected white field noise, T/sqrt(Hz)')
        parser.add_argument('--floor', dest='noise__electronic_floor_T', type=float,
                            help='Electronic floor, field equivalent T/sqrt(Hz)')
        parser.add_argument('--line-amplitude', dest='noise__line_amplitude_T', type=float,
                            help='Mains pickup amplitude, T')

    def run(self, config, out_dir):
        scenario = magnetometer_scenario(**config)
        result = run_magnetometer(scenario, workers=config['workers'])

        write_csv(out_dir / 'demod_sweep.csv', ['B_T', 'X'], zip(result.sweep_B, result.sweep_X), metadata={
            'calibration_slope': result.calibration.slope,
            'calibration_center_T': result.calibration.center_T,
            'linearity_residual_fraction': result.calibration.residual_fraction,
            'oracle_slope': result.oracle_slope,
        })
        write_time_series(result.series, out_dir / 'series.csv')
        write_spectrum(result.spectrum, out_dir / 'spectrum.csv')
        write_spectrum(result.insensitive_spectrum, out_dir / 'insensitive_spectrum.csv')

        f_lo, f_hi = scenario.band_Hz
        lines = sensitivity_report_lines(result.report, reference_delta_B=scenario.reference_delta_B)
        lines += [
            f'band_Hz = {f_lo!r},{f_hi!r}',
            f'band_average_T_per_sqrtHz = {result.band_average!r}',
            f'insensitive_band_average_T_per_sqrtHz = {result.insensitive_band_average!r}',
            f'calibration_slope_per_T = {result.calibration.slope!r}',
            f'calibration_center_T = {result.calibration.center_T!r}',
            f'linear = {str(result.calibration.linear).lower()}',
        ]
        write_lines(out_dir / 'sensitivity.txt', lines)

        self.stdout.write(
            f'Noise {result.band_average * 1e9:.3f} nT/sqrt(Hz) at the GSLAC, '
            f'{result.insensitive_band_average * 1e12:.1f} pT/sqrt(Hz) at '
            f'{scenario.insensitive_bias_T * 1e3:.0f} mT ({f_lo:g}-{f_hi:g} Hz)'
        )
        self.stdout.write(
            f'Shot-noise limit {result.report.delta_B * 1e12:.2f} pT/sqrt(Hz) at prefactor '
            f'{result.report.prefactor:g}; reference {scenario.reference_delta_B * 1e12:.1f} pT/sqrt(Hz) '
            f'implies prefactor {result.report.implied_prefactor(scenario.reference_delta_B):.3f}'
        )
        if not result.calibration.linear:
            self.stdout.write(self.style.WARNING('Demodulated output failed the linearity check'))
        self.success(f'Wrote magnetometer outputs to {out_dir}')
        return {
            'decimated_rate_Hz': result.series.sample_rate_Hz,
            'segment_length': result.spectrum.segment_length,
            'n_averages': result.spectrum.n_averages,
            'sweep_span_T': [float(np.min(result.sweep_B)), float(np.max(result.sweep_B))],
        }
