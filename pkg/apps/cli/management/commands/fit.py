"""
Management command to fit a Lorentzian to a scan CSV.
"""
from apps.cli.base import RunCommand, write_lines
from apps.cli.serializers import FitConfigSerializer
from apps.inference.services import fit_lorentzian, fit_report_lines, fit_summary_row
from apps.scan_engine.services import read_trace
from core.csvio import write_csv


class Command(RunCommand):
    """
    Usage:
        python manage.py fit out/scan.csv --B-min 0.099 --B-max 0.106
    """

    help = 'Fit a Lorentzian lineshape to a scan CSV and write a key = value report'
    serializer_class = FitConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('trace', nargs='?', help='Scan CSV (B_T,signal)')
        parser.add_argument('--model', help='Lineshape model (lorentzian)')
        parser.add_argument('--B-min', dest='B_min_T', type=float, help='Fit window start, T')
        parser.add_argument('--B-max', dest='B_max_T', type=float, help='Fit window stop, T')

    def run(self, config, out_dir):
        trace = read_trace(config['trace'])
        if config['B_min_T'] is not None or config['B_max_T'] is not None:
            trace = trace.window(
                config['B_min_T'] if config['B_min_T'] is not None else trace.B_values[0],
                config['B_max_T'] if config['B_max_T'] is not None else trace.B_values[-1],
            )
        result = fit_lorentzian(trace)

        lines = fit_report_lines(result)
        write_lines(out_dir / 'fit_report.txt', lines)
        columns, row = fit_summary_row(result)
        write_csv(out_dir / 'fit_summary.csv', columns, [row])
        for line in lines:
            self.stdout.write(line)
        if not result.converged:
            self.stdout.write(self.style.WARNING('Fit did not converge'))
        self.success(f'Fitted {len(trace)} points')
        return {'n_points': len(trace)}
