// SPDX-License-Identifier: Apache-2.0
int w5(struct dev *d)
{
	return d ? d->ready : -1;
}

int w4(struct dev *d)
{
	return w5(d);
}

int w3(struct dev *d)
{
	return w4(d);
}

int w2(struct dev *d)
{
	return w3(d);
}

int w1(struct dev *d)
{
	return w2(d);
}

int w0(struct dev *d)
{
	return w1(d);
}

void probe_dev(struct bus *bus)
{
	struct dev *dev = NULL;

	if (w0(dev) < 0)
		return;
	dev->count++;
}
