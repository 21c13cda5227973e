import json
import unittest

from pystrat.env import (
    ScenarioKind, generate_scenario, render_task_description,
    summarize_environment
)
from pystrat.orch import (
    HISTORY_LIMIT, ApiCatalog, DocsMode, ErrorKind, RoundRecord,
    StrategySelection, build_baseline_prompt, build_pipeline_prompt,
    build_selection_prompt, extract_block, parse_pipeline, prompt_messages,
    retrieve_api_docs
)


class PromptsTestCase(unittest.TestCase):
    def setUp(self):
        self.catalog = ApiCatalog.build()
        self.scenario = generate_scenario(ScenarioKind.MAZE_PLAN, 2)
        self.task = render_task_description(self.scenario)
        self.env = summarize_environment(self.scenario)
        self.selection = StrategySelection(('astar', 'rrt', 'pid'))

    def test_selection_prompt(self):
        prompt = build_selection_prompt(self.task, self.env, self.catalog)

        self.assertIn('Scenario-Kind: maze_plan', prompt)
        self.assertIn('Response-Format: selection', prompt)
        self.assertIn(self.task, prompt)
        for api in self.catalog:
            self.assertIn(f'- {api}: ', prompt)
        # on demand, only the descriptions
        self.assertNotIn('Signature:', prompt)

    def test_upfront_docs(self):
        prompt = build_selection_prompt(self.task, self.env, self.catalog,
                                        mode=DocsMode.UPFRONT)
        for spec in self.catalog.values():
            self.assertIn(spec.docs, prompt)

    def test_retrieve_api_docs(self):
        bundle = retrieve_api_docs(self.selection, self.catalog)
        self.assertEqual(bundle.ids, ('astar', 'rrt', 'pid'))
        self.assertEqual(len(bundle), 3)
        self.assertTrue(bundle.text.startswith('### astar'))

        upfront = retrieve_api_docs(self.selection, self.catalog,
                                    DocsMode.UPFRONT)
        self.assertEqual(upfront.ids, tuple(self.catalog))

    def test_pipeline_prompt(self):
        docs = retrieve_api_docs(self.selection, self.catalog)
        prompt = build_pipeline_prompt(self.task, self.env, self.selection,
                                       docs, catalog=self.catalog)

        self.assertIn('Response-Format: pipeline', prompt)
        self.assertIn(docs.text, prompt)
        self.assertIn('astar, rrt, pid', prompt)

        # the example chains the selected APIs and parses
        example = parse_pipeline(prompt, self.catalog)
        self.assertEqual(example.apis, self.selection.apis)
        self.assertEqual(example.stages[1].inputs['start'].source, 'x0')
        self.assertEqual(example.stages[2].inputs['reference'].source,
                         'out2')

    def test_history(self):
        records = [
            RoundRecord(k, error=ErrorKind.PARSE, diagnostic=f'problem {k}')
            for k in range(1, 6)
        ]
        prompt = build_selection_prompt(self.task, self.env, self.catalog,
                                        records)

        shown = [k for k in range(1, 6) if f'- Round {k}: problem {k}'
                 in prompt]
        self.assertEqual(shown, list(range(6 - HISTORY_LIMIT, 6)))

        clean = build_selection_prompt(self.task, self.env, self.catalog)
        self.assertNotIn('Previous attempts', clean)

    def test_baseline_prompt(self):
        tracking = generate_scenario(ScenarioKind.TRACK_LINEAR, 0)
        prompt = build_baseline_prompt(render_task_description(tracking),
                                       summarize_environment(tracking),
                                       tracking)

        self.assertIn('Response-Format: table', prompt)
        self.assertIn('51 rows of 4 states', prompt)
        self.assertIn('```reference\n', prompt)

        prompt = build_baseline_prompt(self.task, self.env, self.scenario)
        self.assertNotIn('```reference', prompt)
        self.assertIn('150 rows of 2 controls', prompt)

    def test_messages(self):
        messages = prompt_messages('hello')
        self.assertEqual([m['role'] for m in messages], ['system', 'user'])
        self.assertEqual(messages[1]['content'], 'hello')
        self.assertTrue(messages[0]['content'])

    def test_deterministic(self):
        a = build_selection_prompt(self.task, self.env, self.catalog)
        b = build_selection_prompt(self.task, self.env, self.catalog)
        self.assertEqual(a, b)
        self.assertEqual(extract_block(a)[0], 'json')
        self.assertIn('apis', json.loads(extract_block(a)[1]))
