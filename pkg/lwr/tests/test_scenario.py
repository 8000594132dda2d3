import copy
import json
import os
import tempfile

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

import lwr
from lwr.constraints import StepConstraint
from lwr.flux import build_lwr_flux
from lwr.region_map import BLACK, GRAY, WHITE, region_map
from lwr.riemann import RQ
from lwr.scenario import load_scenario, parse_scenario, sec5_scenario

SCENARIOS = os.path.join(os.path.dirname(lwr.__file__), 'scenarios')

QUEUE = {
    'schema': 1,
    'name': 'queue',
    'flux': {'kind': 'lwr', 'v_max': 1.0, 'R': 1.0},
    'weight': {'kind': 'linear', 'i_w': 1.0},
    'constraint': {'kind': 'lipschitz', 'xi': [0.3, 0.8], 'p': [0.2, 0.05]},
    'initial': {'breakpoints': [-3.0, -0.5], 'values': [0.0, 0.9, 0.0]},
    'engine': 'split',
    'parameters': {'n': 6, 'h': 3, 'T': 4.0},
}


def with_changes(**changes):
    data = copy.deepcopy(QUEUE)
    data.update(changes)
    return data


class ParseTests(SimpleTestCase):

    def assertCode(self, data, code):
        with self.assertRaises(ValidationError) as ctx:
            parse_scenario(data)
        self.assertEqual(ctx.exception.code, code)

    def test_valid(self):
        scenario = parse_scenario(copy.deepcopy(QUEUE))
        self.assertEqual(scenario.name, 'queue')
        self.assertEqual(scenario.T, 4.0)
        self.assertEqual(scenario.outputs['grid'], 101)
        self.assertEqual(len(scenario.digest), 64)

    def test_unknown_field(self):
        self.assertCode(with_changes(colour='red'), 'schema_unknown_field')

    def test_unknown_parameter(self):
        self.assertCode(with_changes(parameters={'n': 6, 'h': 3, 'T': 4.0, 'n_fan': 8}), 'schema_unknown_field')

    def test_missing_field(self):
        data = copy.deepcopy(QUEUE)
        del data['weight']
        self.assertCode(data, 'schema_missing_field')

    def test_schema_version(self):
        self.assertCode(with_changes(schema=2), 'schema_version')

    def test_engine_constraint_pairing(self):
        self.assertCode(with_changes(constraint={'kind': 'step', 'xi': [0.5], 'p': [0.2, 0.1]}), 'engine_constraint')
        self.assertCode(with_changes(engine='exact', parameters={'T': 1.0}), 'engine_constraint')

    def test_unknown_policy(self):
        data = with_changes(engine='exact', constraint={'kind': 'step', 'xi': [0.5], 'p': [0.2, 0.1]},
                            parameters={'T': 1.0, 'policy': 'median'})
        self.assertCode(data, 'policy')

    def test_profile_shape(self):
        self.assertCode(with_changes(initial={'breakpoints': [-1.0], 'values': [0.0, 0.5, 0.0]}), 'profile_shape')

    def test_initial_datum_keys(self):
        """Breakpoints and values, one more value than breakpoints."""
        data = with_changes(initial={'breakpoints': [-2, -1], 'values': [0, 1, 0]})
        scenario = parse_scenario(data)
        _, _, _, initial = scenario.build()
        self.assertEqual(initial.breakpoints, (-2.0, -1.0))
        self.assertEqual(initial.values, (0.0, 1.0, 0.0))

    def test_initial_datum_other_keys(self):
        self.assertCode(with_changes(initial={'x': [-1.0], 'rho': [0.0, 0.5, 0.0]}), 'schema_unknown_field')
        self.assertCode(with_changes(initial={'breakpoints': [-1.0]}), 'schema_missing_field')

    def test_digest_ignores_key_order(self):
        reordered = dict(reversed(list(copy.deepcopy(QUEUE).items())))
        self.assertEqual(parse_scenario(reordered).digest, parse_scenario(copy.deepcopy(QUEUE)).digest)


class LoadTests(SimpleTestCase):

    def test_yaml(self):
        scenario = load_scenario(os.path.join(SCENARIOS, 'queue_split.yaml'))
        self.assertEqual(scenario.name, 'queue_split')
        self.assertEqual(scenario.engine, 'split')
        self.assertEqual(scenario.parameters, {'n': 6, 'h': 3, 'T': 4.0})

    def test_bundled_corridor_matches_builder(self):
        scenario = load_scenario(os.path.join(SCENARIOS, 'sec5.json'))
        self.assertEqual(scenario.policy, RQ)
        self.assertEqual(scenario.digest, sec5_scenario().digest)

    def test_json_with_breakpoint_datum(self):
        document = {
            'schema': 1,
            'flux': {'kind': 'lwr', 'v_max': 1.0, 'R': 1.0},
            'weight': {'kind': 'linear', 'i_w': 1.0},
            'constraint': {'kind': 'step', 'xi': [0.5], 'p': [0.2, 0.1]},
            'initial': {'breakpoints': [-2, -1], 'values': [0, 1, 0]},
            'engine': 'exact',
            'parameters': {'T': 1.0},
        }
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'block.json')
            with open(path, 'w', encoding='utf-8') as handle:
                json.dump(document, handle)
            scenario = load_scenario(path)
        self.assertEqual(scenario.name, 'block')
        self.assertEqual(scenario.initial, {'breakpoints': [-2, -1], 'values': [0, 1, 0]})

    def test_undecodable(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'broken.json')
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write('{"schema": 1,')
            with self.assertRaises(ValidationError) as ctx:
                load_scenario(path)
        self.assertEqual(ctx.exception.code, 'schema')


class RegionMapTests(SimpleTestCase):

    def setUp(self):
        self.flux = build_lwr_flux(1.0, 1.0)
        self.p = StepConstraint((0.8,), (0.2, 0.1))

    def test_labels_and_raster(self):
        region = region_map(self.flux, self.p, 11)
        self.assertEqual(sum(region.counts().values()), 121)
        # rho_l = 0.8 sits on the threshold with f(0.8) between the two values
        self.assertEqual(region.labels[8][0], 'NNN4')
        image = region.raster()
        self.assertEqual(image.shape, (11, 11))
        self.assertEqual(image[10, 8], BLACK)
        # Increasing data below every level: (0.1, 0.2) is C2
        self.assertEqual(region.labels[1][2], 'C2')
        self.assertEqual(image[10 - 2, 1], GRAY)
        # (0.4, 0.6) exceeds p: nonclassical
        self.assertEqual(region.labels[4][6], 'N2')
        self.assertEqual(image[10 - 6, 4], WHITE)

    def test_rows(self):
        region = region_map(self.flux, self.p, 3)
        rows = list(region.rows())
        self.assertEqual(len(rows), 9)
        self.assertEqual(rows[0][:2], (0.0, 0.0))

    def test_grid_too_small(self):
        with self.assertRaises(ValidationError) as ctx:
            region_map(self.flux, self.p, 1)
        self.assertEqual(ctx.exception.code, 'grid')
