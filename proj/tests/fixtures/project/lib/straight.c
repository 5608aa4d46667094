// SPDX-License-Identifier: Apache-2.0
void reset_stats(struct stats *s)
{
	struct counter *c = NULL;

	s->resets++;
	c->value = 0;
}
