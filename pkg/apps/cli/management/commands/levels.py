"""
Management command to sweep the NV ground-state levels and locate the GSLAC.
"""
import numpy as np

from apps.cli.base import RunCommand, write_lines
from apps.cli.serializers import LevelsConfigSerializer, spin_params
from apps.spin_model.services import find_gslac, level_sweep, transverse_component
from core.csvio import write_csv


class Command(RunCommand):
    """
    Usage:
        python manage.py levels
        python manage.py levels --B-stop 0.25 --D 5.74e9 --out-dir out/levels
    """

    help = 'Eigenlevels versus field magnitude and the located ground-state anti-crossing'
    serializer_class = LevelsConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('--B-start', dest='B_start_T', type=float, help='Sweep start, T')
        parser.add_argument('--B-stop', dest='B_stop_T', type=float, help='Sweep stop, T')
        parser.add_argument('--n-points', dest='n_points', type=int)
        parser.add_argument('--theta', dest='theta_deg', type=float, help='Polar field angle, degrees')
        parser.add_argument('--phi', dest='phi_deg', type=float, help='Azimuthal field angle, degrees')
        parser.add_argument('--transverse', dest='transverse_T', type=float,
                            help='Transverse field for the anti-crossing search, T')
        parser.add_argument('--D', dest='physics__D_Hz', type=float, help='Zero-field splitting, Hz')
        parser.add_argument('--gamma', dest='physics__gamma_over_2pi_Hz_per_T', type=float,
                            help='Gyromagnetic ratio, Hz/T')

    def run(self, config, out_dir):
        params = spin_params(**config['physics'])
        B = np.linspace(config['B_start_T'], config['B_stop_T'], config['n_points'])
        energies = level_sweep(params, B, config['theta_deg'], config['phi_deg'], workers=config['workers'])

        transverse = config['transverse_T']
        if transverse is None:
            transverse = transverse_component(params.crossing_field, config['theta_deg'])
        low = config['search_low_T'] or 0.5 * params.crossing_field
        high = config['search_high_T'] or 1.5 * params.crossing_field
        location = find_gslac(params, transverse, (low, high))

        columns = ['B_T'] + [f'E{k + 1}_Hz' for k in range(params.dimension)]
        metadata = {
            'gslac_center_T': location.B_center,
            'gslac_gap_Hz': location.min_gap,
            'transverse_T': transverse,
        }
        write_csv(out_dir / 'levels.csv', columns, (
            [b, *row] for b, row in zip(B, energies)
        ), metadata=metadata)
        write_lines(out_dir / 'gslac.txt', [f'{key} = {value!r}' for key, value in metadata.items()])

        self.stdout.write(f'GSLAC at {location.B_center * 1e3:.4f} mT, gap {location.min_gap:.4g} Hz')
        self.success(f'Wrote {len(B)} level rows to {out_dir / "levels.csv"}')
        return {'transverse_T': transverse, 'search_range_T': [low, high], 'dimension': params.dimension}
