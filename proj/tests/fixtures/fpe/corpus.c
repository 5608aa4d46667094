// SPDX-License-Identifier: Apache-2.0
// Each function marks its entry point with S (or starts at the top) and its
// sink with T.

void f01(int a)
{
	if (a)
		sink(); /*T*/
}

void f02(int a, int b)
{
	if (a) {
		if (b)
			sink(); /*T*/
	}
}

void f03(int a)
{
	if (a)
		return;
	sink(); /*T*/
}

void f04(int a, int b)
{
	if (a)
		return;
	if (b)
		goto out;
	sink(); /*T*/
out:
	cleanup();
}

void f05(int a, int b)
{
	if (a) {
		if (b)
			return;
	}
	sink(); /*T*/
}

void f06(int a, int b)
{
	if (a)
		work();
	else
		sink(); /*T*/
	if (b)
		return;
}

void f07(int a, int b, int c)
{
	if (a) {
		if (b)
			goto err;
		sink(); /*T*/
	}
	if (c)
		goto err;
	return;
err:
	cleanup();
}

void f08(int a, int b)
{
	if (a && b)
		sink(); /*T*/
}

void f09(int a, int b)
{
	if (a || b)
		return;
	sink(); /*T*/
}

void f10(int a, int b, int c)
{
	if (a)
		step1();
	else if (b)
		step2();
	else if (c)
		sink(); /*T*/
}

void f11(int a, int b)
{
	struct s *p = NULL; /*S*/
	if (a)
		return;
	if (b)
		sink(); /*T*/
}

void f12(int a, int b)
{
	if (a)
		return;
	prepare(); /*S*/
	if (b)
		return;
	sink(); /*T*/
}

void f13(int a)
{
	return;
	sink(); /*T*/
}

void f14(int a, int b, int c)
{
	if (a) {
		if (b) {
			if (c)
				sink(); /*T*/
		}
	}
}

void f15(int a, int b, int c)
{
	if (a)
		goto out;
	if (b)
		goto out;
	if (c)
		goto out;
	sink(); /*T*/
out:
	return;
}

void f16(int a, int b)
{
	if (a) {
		if (b)
			return;
		else
			sink(); /*T*/
	}
}

void f17(int a, int b, int c)
{
	if (a)
		return;
	sink(); /*T*/
	if (b)
		return;
	if (c)
		return;
}

void f18(int a, int b)
{
	if (a) {
		sink(); /*T*/
	} else {
		if (b)
			return;
	}
}

void f19(int a, int b, int c, int d)
{
	if (a)
		return;
	if (b) {
		if (c)
			return;
		if (d)
			sink(); /*T*/
	}
}

void f20(int a, int b)
{
	if (!a)
		return;
	if (!b)
		goto fail;
	sink(); /*T*/
	return;
fail:
	undo();
}

void f21(int a, int b, int c)
{
	if (a && !b)
		return;
	if (c)
		sink(); /*T*/
}

void f22(int a, int b)
{
	if (a)
		goto skip;
	work();
skip:
	if (b)
		sink(); /*T*/
}

void f23(int a, int b, int c)
{
	if (a) {
		if (b)
			goto out;
	} else {
		if (c)
			goto out;
	}
	sink(); /*T*/
out:
	return;
}

void f24(int a, int b, int c, int d, int e)
{
	if (a)
		return;
	if (b)
		return;
	if (c) {
		if (d)
			return;
		if (e)
			sink(); /*T*/
	}
}

void f25(int a, int b)
{
	if (a)
		return;
	if (a)
		sink(); /*T*/
	if (b)
		return;
}

void f26(int a, int b, int c)
{
	if (a) {
		if (b)
			return;
		work();
	}
	if (c)
		return;
	sink(); /*T*/
}

void f27(int a, int b)
{
	if (a)
		goto out;
	sink(); /*T*/
	if (b)
		goto out;
	return;
out:
	cleanup();
}

void f28(int a, int b, int c)
{
	int x = 0; /*S*/

	if (a) {
		if (b)
			return;
	} else if (c) {
		return;
	}
	sink(); /*T*/
}

void f29(int a, int b)
{
	if (!a) {
		if (b)
			return;
		else
			goto out;
	}
	sink(); /*T*/
out:
	return;
}
