"""
Management command: shot-noise-limited sensitivity from linewidth, contrast and photon rate.
"""
from apps.cli.base import RunCommand, write_lines
from apps.cli.serializers import SenseConfigSerializer
from apps.lockin_dsp.services import photon_rate, sensitivity_report_lines, shot_noise_limit


class Command(RunCommand):
    """
    Usage:
        python manage.py sense
        python manage.py sense --fwhm 0.84e-3 --contrast 0.15 --power 4.2e-3
    """

    help = 'Photon-shot-noise-limited field sensitivity'
    serializer_class = SenseConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('--fwhm', dest='fwhm_T', type=float, help='Resonance width, T')
        parser.add_argument('--contrast', dest='contrast', type=float)
        parser.add_argument('--photon-rate', dest='photon_rate_per_s', type=float)
        parser.add_argument('--power', dest='collected_power_W', type=float, help='Collected light, W')
        parser.add_argument('--wavelength', dest='wavelength_m', type=float)
        parser.add_argument('--prefactor', dest='prefactor', type=float)
        parser.add_argument('--reference', dest='reference_delta_B_T', type=float,
                            help='Sensitivity to compare against, T/sqrt(Hz)')

    def run(self, config, out_dir):
        rate = config['photon_rate_per_s']
        if rate is None:
            rate = photon_rate(config['collected_power_W'], config['wavelength_m'])
            source = f'{config["collected_power_W"]!r} W at {config["wavelength_m"]!r} m'
        else:
            source = 'given'
        report = shot_noise_limit(
            config['fwhm_T'], config['contrast'], rate, prefactor=config['prefactor'],
            notes={'photon_rate': source},
        )
        lines = sensitivity_report_lines(report, reference_delta_B=config['reference_delta_B_T'])
        write_lines(out_dir / 'sensitivity.txt', lines)
        for line in lines:
            self.stdout.write(line)
        self.success(f'delta_B = {report.delta_B * 1e12:.2f} pT/sqrt(Hz)')
        return {'photon_rate_per_s': rate}
