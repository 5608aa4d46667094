// SPDX-License-Identifier: Apache-2.0
int validate(struct dev *d)
{
	if (!d)
		return 0;
	return d->magic == DEV_MAGIC;
}

void open_a(struct ctx *c)
{
	struct dev *dev = NULL;

	if (!validate(dev))
		return;
	dev->opens++;
}

void open_b(struct ctx *c)
{
	struct dev *p = NULL;

	if (!validate(p))
		return;
	p->opens--;
}
